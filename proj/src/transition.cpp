#include "latstruct/transition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latstruct {

std::vector<Hypothesis> beam_search(const TransitionModel& model, int k,
                                    int max_len, bool length_normalize) {
  if (k < 1) throw std::invalid_argument("beam_search: k < 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len < 1");

  std::vector<Hypothesis> beam{Hypothesis{{}, 0.0, model.stopped({})}};
  for (int step = 0; step < max_len; ++step) {
    bool all_complete = true;
    for (const Hypothesis& h : beam)
      if (!h.complete) all_complete = false;
    if (all_complete) break;

    std::vector<Hypothesis> expanded;
    for (const Hypothesis& h : beam) {
      if (h.complete) {
        expanded.push_back(h);
        continue;
      }
      std::vector<int> actions = model.admissible(h.actions);
      Vec logp = model.action_log_probs(h.actions);
      if (actions.empty() || actions.size() != logp.size())
        throw std::runtime_error("beam_search: bad transition model output");
      for (std::size_t a = 0; a < actions.size(); ++a) {
        Hypothesis next;
        next.actions = h.actions;
        next.actions.push_back(actions[a]);
        next.log_prob = h.log_prob + logp[a];
        next.complete = model.stopped(next.actions);
        expanded.push_back(std::move(next));
      }
    }
    auto rank = [length_normalize](const Hypothesis& h) {
      return length_normalize && !h.actions.empty()
                 ? h.log_prob / static_cast<double>(h.actions.size())
                 : h.log_prob;
    };
    std::stable_sort(expanded.begin(), expanded.end(),
                     [&](const Hypothesis& a, const Hypothesis& b) {
                       double ra = rank(a), rb = rank(b);
                       if (ra != rb) return ra > rb;
                       return a.actions < b.actions;
                     });
    if (static_cast<int>(expanded.size()) > k) expanded.resize(k);
    beam = std::move(expanded);
  }
  // Anything still open at max_len is reported incomplete.
  std::vector<Hypothesis> out;
  for (Hypothesis& h : beam) out.push_back(std::move(h));
  return out;
}

std::vector<int> ancestral_sample(const TransitionModel& model, Rng& rng,
                                  int max_len) {
  std::vector<int> prefix;
  for (int step = 0; step < max_len; ++step) {
    if (model.stopped(prefix)) return prefix;
    std::vector<int> actions = model.admissible(prefix);
    Vec logp = model.action_log_probs(prefix);
    if (actions.empty() || actions.size() != logp.size())
      throw std::runtime_error("ancestral_sample: bad transition model output");
    Vec w(logp.size());
    double m = *std::max_element(logp.begin(), logp.end());
    for (std::size_t i = 0; i < logp.size(); ++i)
      w[i] = is_neg_inf(logp[i]) ? 0.0 : std::exp(logp[i] - m);
    prefix.push_back(actions[rng.categorical(w)]);
  }
  if (model.stopped(prefix)) return prefix;
  throw std::runtime_error("ancestral_sample: max_len exceeded before stop");
}

ShiftReduceModel::ShiftReduceModel(int leaves, double p_shift)
    : leaves_(leaves), p_shift_(p_shift) {
  if (leaves < 2) throw std::invalid_argument("ShiftReduceModel: N < 2");
  if (!(p_shift > 0.0 && p_shift <= 1.0))
    throw std::invalid_argument("ShiftReduceModel: p_shift not in (0,1]");
}

std::pair<int, int> ShiftReduceModel::counts(
    const std::vector<int>& prefix) const {
  int shifts = 0;
  for (int a : prefix) shifts += a ? 1 : 0;
  int stack = shifts - (static_cast<int>(prefix.size()) - shifts);
  return {shifts, stack};
}

std::vector<int> ShiftReduceModel::admissible(
    const std::vector<int>& prefix) const {
  auto [shifts, stack] = counts(prefix);
  std::vector<int> out;
  if (stack >= 2) out.push_back(0);
  if (shifts < leaves_) out.push_back(1);
  return out;
}

Vec ShiftReduceModel::action_log_probs(const std::vector<int>& prefix) const {
  auto [shifts, stack] = counts(prefix);
  bool can_reduce = stack >= 2;
  bool can_shift = shifts < leaves_;
  Vec out;
  if (can_reduce && can_shift) {
    out.push_back(p_shift_ < 1.0
                      ? std::log1p(-p_shift_)
                      : -std::numeric_limits<double>::infinity());
    out.push_back(std::log(p_shift_));
  } else if (can_reduce || can_shift) {
    out.push_back(0.0);
  }
  return out;
}

bool ShiftReduceModel::stopped(const std::vector<int>& prefix) const {
  return static_cast<int>(prefix.size()) == 2 * leaves_ - 1;
}

}  // namespace latstruct
