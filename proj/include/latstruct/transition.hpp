#pragma once

#include <vector>

#include "latstruct/rng.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Incremental prediction: structures built by appending actions, with the
// admissible set and next-action distribution conditioned on the prefix.
// action_log_probs is aligned with admissible() and normalizes to 1.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  virtual std::vector<int> admissible(const std::vector<int>& prefix) const = 0;
  virtual Vec action_log_probs(const std::vector<int>& prefix) const = 0;
  virtual bool stopped(const std::vector<int>& prefix) const = 0;
};

struct Hypothesis {
  std::vector<int> actions;
  double log_prob = 0.0;
  bool complete = false;
};

// Width-k beam over cumulative log-probability; k = 1 is greedy. Hypotheses
// whose last action stopped the model are kept but not expanded. When
// max_len runs out, surviving hypotheses are returned flagged incomplete.
// length_normalize ranks by log_prob / length instead (off by default; the
// returned log_prob stays unnormalized).
std::vector<Hypothesis> beam_search(const TransitionModel& model, int k,
                                    int max_len,
                                    bool length_normalize = false);

// Draws a full action sequence with probability equal to the product of
// conditionals. Throws if the model has not stopped within max_len actions.
std::vector<int> ancestral_sample(const TransitionModel& model, Rng& rng,
                                  int max_len);

// Shift-reduce transition system over binary trees with N leaves: action 1 is
// shift, 0 is reduce; P(shift) = p_shift when both actions are admissible.
class ShiftReduceModel : public TransitionModel {
 public:
  ShiftReduceModel(int leaves, double p_shift);
  std::vector<int> admissible(const std::vector<int>& prefix) const override;
  Vec action_log_probs(const std::vector<int>& prefix) const override;
  bool stopped(const std::vector<int>& prefix) const override;

 private:
  std::pair<int, int> counts(const std::vector<int>& prefix) const;
  int leaves_;
  double p_shift_;
};

}  // namespace latstruct
