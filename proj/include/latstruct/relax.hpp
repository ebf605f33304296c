#pragma once

#include <functional>

#include "latstruct/diff.hpp"
#include "latstruct/domain.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// E[Z] under the Gibbs distribution, with the pullback taken by reverse mode
// through the domain's inference recursions. Supported wherever the domain
// has a marginal oracle (one-of-K, bit vector, chain, arborescence).
DiffVec marginal_layer(const StructDomain& domain, const Vec& scores);

struct SinkhornResult {
  Tensor transport;  // m x m, row and column sums 1 within tol
  bool converged = false;
  int iterations = 0;
  // Cotangent w.r.t. the score matrix, by reverse mode through the unrolled
  // log-space iterations.
  std::function<Tensor(const Tensor&)> pullback;
};

// Alternating row/column renormalization of exp(S/gamma) in the log domain,
// run until the worst row/column-sum deviation drops below tol. Hitting
// max_iter returns the current iterate flagged unconverged.
SinkhornResult sinkhorn(const Tensor& scores, double gamma, double tol = 1e-9,
                        int max_iter = 1000);

enum class NoiseKind { kGumbel, kGaussian };

struct PerturbedArgmax {
  Vec mean;  // (1/M) sum_i argmax(s + scale * U_i)
  // Noise-correlation estimator reusing the same M perturbations.
  std::function<Vec(const Vec&)> pullback;
};

PerturbedArgmax perturbed_argmax(const StructDomain& domain, const Vec& scores,
                                 double noise_scale, int samples, Rng& rng,
                                 NoiseKind kind = NoiseKind::kGumbel);

}  // namespace latstruct
