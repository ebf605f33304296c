#pragma once

#include <functional>
#include <vector>

#include "latstruct/domain.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Quadratic-regularized structured argmax,
//   max_{mu in conv(Z)} <mu, s> - 1/2 ||mu||^2,
// solved by the active-set (min-norm-point) method using only calls to the
// domain's maximization oracle.
struct SparseMapResult {
  Vec mu;                // the solution (a point of the marginal polytope)
  SparseDist active_set;  // witness distribution: mu = E_active_set[Z]
  int iterations = 0;
  double gap = 0.0;  // final linear-oracle duality gap
  bool converged = false;
  Vec objective_trace;  // objective after each outer iteration

  // Cotangent w.r.t. s from a cotangent on mu, via the KKT system restricted
  // to the active support.
  std::function<Vec(const Vec&)> pullback;
  // Gradient w.r.t. s of sum_z alpha_z(s) c_z for per-support coefficients c
  // (same KKT system; used for marginalizing over the witness distribution).
  std::function<Vec(const Vec&)> alpha_weighted_grad;
};

// init_rng, when given, starts from a random structure (scores replaced by
// Gumbel noise) instead of the MAP vertex.
SparseMapResult sparsemap(const StructDomain& domain, const Vec& scores,
                          int max_iter = 100, double tol = 1e-9,
                          Rng* init_rng = nullptr);

// Euclidean projection of an arbitrary point onto conv(Z); the projection of
// x is the sparsemap solution at scores x.
Vec project_marginal_polytope(const StructDomain& domain, const Vec& point,
                              int max_iter = 100, double tol = 1e-9);

}  // namespace latstruct
