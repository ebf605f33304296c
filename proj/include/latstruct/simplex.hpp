#pragma once

#include <vector>

#include "latstruct/diff.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Regularized argmax solution in thresholded form:
//   probs_i = max(0, (alpha-1) s_i - tau)^(1/(alpha-1)),
// with tau expressed against the original (unshifted) scores.
struct EntmaxSolution {
  Vec probs;
  double tau = 0.0;
  double alpha = 2.0;
  std::vector<int> support;
  // topk_sparsemax only: the l0 constraint was loose, so this equals the
  // unconstrained sparsemax.
  bool exact = false;
};

// probs proportional to exp(s); -inf entries are hard masks.
// Throws if every entry is masked.
Vec softmax(const Vec& s);

// (diag(z) - z z^T) v at a softmax output z.
Vec softmax_pullback(const Vec& z, const Vec& v);
DiffVec softmax_layer(const Vec& s);

// Euclidean projection of s onto the simplex, exact via sort-based threshold.
EntmaxSolution sparsemax(const Vec& s);

// alpha-entmax by bisection on the threshold, T halvings; the final vector is
// renormalized so it sums to exactly 1. alpha must be > 1 (alpha = 1 is the
// softmax path, dispatched separately).
EntmaxSolution entmax_bisect(const Vec& s, double alpha, int iters = 60);

// (diag(q) - q q^T / 1^T q) v with q_i = z_i^(2-alpha) on the support.
Vec entmax_pullback(const EntmaxSolution& sol, const Vec& v);
DiffVec sparsemax_layer(const Vec& s);
DiffVec entmax_layer(const Vec& s, double alpha, int iters = 60);

// sparsemax restricted to the k highest-scored entries (lowest index wins
// ties); all others exactly 0.
EntmaxSolution topk_sparsemax(const Vec& s, int k);

}  // namespace latstruct
