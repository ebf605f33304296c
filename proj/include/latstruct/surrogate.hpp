#pragma once

#include <functional>
#include <memory>

#include "latstruct/domain.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Discrete forward pass plus a constructed backward pass. The pullback is a
// chosen rule, not a derivative; `exact` stays false so gradient-check
// tooling skips these layers. SPIGOT, LI and I-MLE pullbacks are nonlinear
// in the cotangent.
struct DiffStruct {
  Structure value;
  std::function<Vec(const Vec&)> pullback;
  bool exact = false;
};

// Straight-through: forward argmax, identity backward.
DiffStruct ste(const StructDomain& domain, const Vec& scores);

// Forward argmax; backward pretends the forward pass had been softmax (the
// marginal layer, for structured domains).
DiffStruct softmax_st(const StructDomain& domain, const Vec& scores);

// Forward argmax; pullback(v) = z0 - proj_conv(Z)(z0 - eta v), the projection
// computed by the sparsemap solver. An unconverged projection sets
// *projection_unconverged and still returns the flagged iterate.
DiffStruct spigot(const StructDomain& domain, const Vec& scores,
                  double eta = 1.0,
                  std::shared_ptr<bool> projection_unconverged = nullptr);

// Forward argmax; pullback(v) = (z0(s + eta v) - z0(s)) / eta.
DiffStruct linear_interp(const StructDomain& domain, const Vec& scores,
                         double eta = 1.0);

// Forward argmax(s + scale U); pullback(v) = z0(s + scale U) -
// z0(s + scale U - eta v), with the same noise realization in both terms.
DiffStruct imle(const StructDomain& domain, const Vec& scores, double eta,
                double noise_scale, Rng& rng);

// Integer latent by flooring; backward ignores the floor.
struct DiffInt {
  long value = 0;
  std::function<double(double)> pullback;
};
DiffInt round_ste(double s);

struct Codebook {
  std::vector<Vec> anchors;
};

// Snap-to-grid on a codebook: nearest anchor by Euclidean distance (lowest
// index on ties), squared-error commitment penalty, straight-through pullback.
struct Quantized {
  Vec anchor;
  int index = 0;
  double commit_loss = 0.0;
  std::function<Vec(const Vec&)> pullback;
};
Quantized vq_quantize(const Vec& v, const Codebook& codebook);

}  // namespace latstruct
