#include "latstruct/surrogate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "latstruct/sparsemap.hpp"

namespace latstruct {

DiffStruct ste(const StructDomain& domain, const Vec& scores) {
  Structure z = argmax_oracle(domain, scores);
  return DiffStruct{std::move(z), [](const Vec& v) { return v; }, false};
}

DiffStruct softmax_st(const StructDomain& domain, const Vec& scores) {
  if (!domain.has_marginals())
    throw UnsupportedCapability(domain.name() +
                                ": softmax_st needs a marginal oracle");
  Structure z = argmax_oracle(domain, scores);
  DiffVec marg = domain.diff_marginals(scores);
  return DiffStruct{std::move(z), marg.pullback, false};
}

DiffStruct spigot(const StructDomain& domain, const Vec& scores, double eta,
                  std::shared_ptr<bool> projection_unconverged) {
  Structure z = argmax_oracle(domain, scores);
  Vec z0 = to_vec(z);
  const StructDomain* dom = &domain;
  auto pull = [dom, z0, eta, projection_unconverged](const Vec& v) {
    if (v.size() != z0.size())
      throw std::invalid_argument("spigot: cotangent size mismatch");
    Vec target(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) target[i] = z0[i] - eta * v[i];
    SparseMapResult proj = sparsemap(*dom, target);
    if (projection_unconverged && !proj.converged)
      *projection_unconverged = true;
    Vec out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) out[i] = z0[i] - proj.mu[i];
    return out;
  };
  return DiffStruct{std::move(z), pull, false};
}

DiffStruct linear_interp(const StructDomain& domain, const Vec& scores,
                         double eta) {
  if (eta <= 0.0) throw std::invalid_argument("linear_interp: eta <= 0");
  Structure z = argmax_oracle(domain, scores);
  Vec z0 = to_vec(z);
  const StructDomain* dom = &domain;
  Vec s = scores;
  auto pull = [dom, z0, s, eta](const Vec& v) {
    if (v.size() != z0.size())
      throw std::invalid_argument("linear_interp: cotangent size mismatch");
    Vec shifted(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) shifted[i] = s[i] + eta * v[i];
    Vec z1 = to_vec(dom->map_oracle(shifted));
    Vec out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i)
      out[i] = (z1[i] - z0[i]) / eta;
    return out;
  };
  return DiffStruct{std::move(z), pull, false};
}

DiffStruct imle(const StructDomain& domain, const Vec& scores, double eta,
                double noise_scale, Rng& rng) {
  if (eta <= 0.0) throw std::invalid_argument("imle: eta <= 0");
  if (noise_scale < 0.0) throw std::invalid_argument("imle: negative scale");
  Vec perturbed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    perturbed[i] = scores[i] + noise_scale * rng.gumbel();
  Structure z = argmax_oracle(domain, perturbed);
  Vec zp = to_vec(z);
  const StructDomain* dom = &domain;
  // The same noise realization enters both terms of the backward rule.
  auto pull = [dom, zp, perturbed, eta](const Vec& v) {
    if (v.size() != zp.size())
      throw std::invalid_argument("imle: cotangent size mismatch");
    Vec shifted(perturbed.size());
    for (std::size_t i = 0; i < perturbed.size(); ++i)
      shifted[i] = perturbed[i] - eta * v[i];
    Vec z1 = to_vec(dom->map_oracle(shifted));
    Vec out(zp.size());
    for (std::size_t i = 0; i < zp.size(); ++i) out[i] = zp[i] - z1[i];
    return out;
  };
  return DiffStruct{std::move(z), pull, false};
}

DiffInt round_ste(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("round_ste: non-finite");
  DiffInt out;
  out.value = static_cast<long>(std::floor(s));
  out.pullback = [](double v) { return v; };
  return out;
}

Quantized vq_quantize(const Vec& v, const Codebook& codebook) {
  if (codebook.anchors.empty())
    throw std::invalid_argument("vq_quantize: empty codebook");
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(codebook.anchors.size()); ++i) {
    const Vec& a = codebook.anchors[i];
    if (a.size() != v.size())
      throw std::invalid_argument("vq_quantize: dimension mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
      d += (v[j] - a[j]) * (v[j] - a[j]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  Quantized q;
  q.anchor = codebook.anchors[best];
  q.index = best;
  q.commit_loss = best_d;
  q.pullback = [](const Vec& cot) { return cot; };
  return q;
}

}  // namespace latstruct
