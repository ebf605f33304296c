#pragma once

#include <atomic>
#include <functional>
#include <vector>

#include "latstruct/diff.hpp"
#include "latstruct/domain.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/simplex.hpp"
#include "latstruct/surrogate.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Downstream evaluation g(z); accepts a vertex (0/1 coordinates) or a relaxed
// point. The call counter increments exactly once per evaluation and is what
// decoder-call accounting reports.
struct DownstreamFn {
  std::function<double(const Vec&)> value;
  // Optional: d value / d z at a relaxed point (used by pathwise estimators).
  std::function<Vec(const Vec&)> grad;

  mutable std::atomic<long> calls{0};

  DownstreamFn() = default;
  DownstreamFn(DownstreamFn&& o) noexcept
      : value(std::move(o.value)),
        grad(std::move(o.grad)),
        calls(o.calls.load()) {}
  DownstreamFn& operator=(DownstreamFn&& o) noexcept {
    value = std::move(o.value);
    grad = std::move(o.grad);
    calls = o.calls.load();
    return *this;
  }

  double operator()(const Vec& z) const {
    ++calls;
    return value(z);
  }
  long call_count() const { return calls.load(); }
};

struct BaselineConfig {
  enum class Kind { kNone, kConstant, kEma, kSelfCritic, kSampleCritic };
  Kind kind = Kind::kNone;
  double constant = 0.0;
  double ema_decay = 0.9;
  // EMA state is frozen for the duration of one estimator call and updated
  // by its owner between calls.
  double ema_state = 0.0;
  bool ema_initialized = false;
};

void ema_update(BaselineConfig& baseline, double batch_value);

struct EstimatorReport {
  Vec gradient;            // estimate of d E[g(Z)] / d s
  double value = 0.0;      // estimate of E[g(Z)]
  Vec per_sample_values;   // g at each evaluated / sampled structure
  Vec grad_stderr;         // per-coordinate standard error of the mean
  double variance = 0.0;   // mean over coordinates of per-sample variance
  long decoder_calls = 0;
  bool converged = true;   // false when an inner solver was cut off
};

// Exact expected loss and gradient by enumeration; calls g exactly |Z| times.
EstimatorReport explicit_marginal(const StructDomain& domain, const Vec& scores,
                                  const DownstreamFn& g,
                                  std::size_t cap = 1000000);

// Score-function (REINFORCE) estimator with the chosen control variate.
EstimatorReport sfe_gradient(const StructDomain& domain, const Vec& scores,
                             const DownstreamFn& g, int samples,
                             BaselineConfig& baseline, Rng& rng);

// Rao-Blackwellized sum-and-sample: exact over the m highest-probability
// structures, score-function correction from the renormalized tail. m >= |Z|
// clamps to explicit marginalization.
EstimatorReport sum_and_sample(const StructDomain& domain, const Vec& scores,
                               const DownstreamFn& g, int summed, Rng& rng,
                               int tail_samples = 1,
                               std::size_t cap = 1000000);

// One-hot argmax(s + Gumbel); distributed as softmax(s).
Structure gumbel_max_sample(const Vec& scores, Rng& rng);

// softmax((s + U) / gamma); pathwise differentiable at fixed noise.
DiffVec gumbel_softmax(const Vec& scores, double gamma, Rng& rng);

// Forward one-hot argmax(s + U); backward through gumbel_softmax at the same
// noise.
DiffStruct st_gumbel(const Vec& scores, double gamma, Rng& rng);

// argmax(s + scale U) with i.i.d. Gumbel part perturbations. Valid structure,
// but not Gibbs-distributed in general (one-of-K being the exception).
Structure perturb_and_map(const StructDomain& domain, const Vec& scores,
                          double noise_scale, Rng& rng);

// Deterministic sparse marginalization: sparsemax over per-structure scores
// (top-k restricted when topk > 0). Decoder calls equal the support size.
EstimatorReport sparsemax_marginal(const StructDomain& domain,
                                   const Vec& scores, const DownstreamFn& g,
                                   int topk = 0, std::size_t cap = 1000000);

// Marginalization over the SparseMAP active-set witness distribution.
// random_init draws the initial structure from part-level Gumbel noise.
EstimatorReport sparsemap_marginal(const StructDomain& domain,
                                   const Vec& scores, const DownstreamFn& g,
                                   bool random_init = false,
                                   Rng* rng = nullptr);

// Mixed (discrete-continuous) scalar on [0,1]: draw from the base and project
// onto the unit interval, leaving atoms at 0 and 1.
struct RectifiedBase {
  enum class Kind { kGaussian, kStretchedConcrete };
  Kind kind = Kind::kGaussian;
  // Gaussian base.
  double mean = 0.0;
  double sigma = 1.0;
  // Stretched concrete base.
  double log_alpha = 0.0;
  double beta = 0.5;
  double low = -0.1;
  double high = 1.1;
};
double rectified_sample(const RectifiedBase& base, Rng& rng);

// sparsemax(s + sigma * Gaussian): a mixed distribution on the full simplex,
// faces and vertices included.
Vec gaussian_sparsemax_sample(const Vec& scores, double sigma, Rng& rng);

// The stop-gradient surrogate objective for SFE, built on the scalar tape:
// differentiating it reproduces the estimator. Its forward value is not a
// loss estimate and must not be used for reporting.
struct SfeSurrogate {
  double surrogate_value = 0.0;
  Vec grad_scores;
};
SfeSurrogate sfe_surrogate_tape(const StructDomain& domain, const Vec& scores,
                                const std::vector<Structure>& samples,
                                const Vec& sample_values, double baseline,
                                std::size_t cap = 1000000);

}  // namespace latstruct
