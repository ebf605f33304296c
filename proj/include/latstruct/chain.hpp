#pragma once

#include <vector>

#include "latstruct/domain.hpp"

namespace latstruct {

// Markov sequence of `length` positions over `tags` labels, scored by bigram
// parts (i, t, t') for 1 <= i < length. Part layout:
//   index = ((i-1)*T + t)*T + t'   with i 1-based, t and t' 0-based.
class LinearChainDomain : public StructDomain {
 public:
  LinearChainDomain(int length, int tags);

  std::string name() const override { return "chain"; }
  int part_count() const override { return (length_ - 1) * tags_ * tags_; }
  bool has_marginals() const override { return true; }
  bool has_sampler() const override { return true; }
  bool enumerable() const override { return true; }

  int chain_length() const { return length_; }
  int tag_count() const { return tags_; }

  static int part_index(int i, int t, int t2, int tags) {
    return ((i - 1) * tags + t) * tags + t2;
  }

  Structure from_tags(const std::vector<int>& tags) const;
  std::vector<int> to_tags(const Structure& z) const;

  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;  // Viterbi
  double structure_count() const override;
  std::vector<Structure> enumerate_unsorted() const override;
  std::pair<Vec, double> marginals(const Vec& scores) const override;
  DiffVec diff_marginals(const Vec& scores) const override;
  // Forwards filtering, backwards sampling.
  Structure sample_gibbs(const Vec& scores, Rng& rng) const override;

 private:
  int length_, tags_;
};

// Bigram marginals and logZ by forward-backward in log space.
std::pair<Vec, double> forward_backward(const LinearChainDomain& chain,
                                        const Vec& scores);

Structure ffbs_sample(const LinearChainDomain& chain, const Vec& scores,
                      Rng& rng);

}  // namespace latstruct
