#include "latstruct/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "latstruct/sparsemap.hpp"
#include "latstruct/tape.hpp"

namespace latstruct {

namespace {

// Mean, per-coordinate stderr and pooled variance of per-sample gradient
// contributions.
void finalize_moments(const std::vector<Vec>& contribs, EstimatorReport& rep) {
  const int n = static_cast<int>(contribs.size());
  const int p = n ? static_cast<int>(contribs[0].size()) : 0;
  rep.gradient.assign(p, 0.0);
  rep.grad_stderr.assign(p, 0.0);
  rep.variance = 0.0;
  if (n == 0) return;
  for (const Vec& c : contribs)
    for (int j = 0; j < p; ++j) rep.gradient[j] += c[j];
  for (double& x : rep.gradient) x /= n;
  if (n < 2) return;
  double pooled = 0.0;
  for (int j = 0; j < p; ++j) {
    double ss = 0.0;
    for (const Vec& c : contribs) {
      double d = c[j] - rep.gradient[j];
      ss += d * d;
    }
    double var = ss / (n - 1);
    pooled += var;
    rep.grad_stderr[j] = std::sqrt(var / n);
  }
  rep.variance = pooled / p;
}

}  // namespace

void ema_update(BaselineConfig& baseline, double batch_value) {
  if (!baseline.ema_initialized) {
    baseline.ema_state = batch_value;
    baseline.ema_initialized = true;
  } else {
    baseline.ema_state = baseline.ema_decay * baseline.ema_state +
                         (1.0 - baseline.ema_decay) * batch_value;
  }
}

EstimatorReport explicit_marginal(const StructDomain& domain,
                                  const Vec& scores, const DownstreamFn& g,
                                  std::size_t cap) {
  SparseDist dist = gibbs_enum(domain, scores, cap);
  const int p = domain.part_count();

  EstimatorReport rep;
  rep.per_sample_values.reserve(dist.support.size());
  Vec mu(p, 0.0);
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    Vec zv = to_vec(dist.support[i]);
    for (int j = 0; j < p; ++j) mu[j] += dist.weights[i] * zv[j];
  }
  rep.gradient.assign(p, 0.0);
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    double val = g(to_vec(dist.support[i]));
    rep.per_sample_values.push_back(val);
    rep.value += dist.weights[i] * val;
    Vec zv = to_vec(dist.support[i]);
    for (int j = 0; j < p; ++j)
      rep.gradient[j] += val * dist.weights[i] * (zv[j] - mu[j]);
  }
  rep.grad_stderr.assign(p, 0.0);
  rep.variance = 0.0;
  rep.decoder_calls = static_cast<long>(dist.support.size());
  return rep;
}

EstimatorReport sfe_gradient(const StructDomain& domain, const Vec& scores,
                             const DownstreamFn& g, int samples,
                             BaselineConfig& baseline, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("sfe_gradient: samples < 1");
  if (!domain.has_sampler())
    throw UnsupportedCapability(domain.name() + ": no exact sampler");
  if (!domain.has_marginals())
    throw UnsupportedCapability(domain.name() + ": no log-prob gradient");

  long calls_before = g.call_count();
  auto [mu, logz] = domain.marginals(scores);
  (void)logz;

  double critic = 0.0;
  if (baseline.kind == BaselineConfig::Kind::kSelfCritic)
    critic = g(to_vec(domain.map_oracle(scores)));

  EstimatorReport rep;
  std::vector<Vec> contribs;
  contribs.reserve(samples);
  double value_acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    Structure z = domain.sample_gibbs(scores, rng);
    Vec zv = to_vec(z);
    double val = g(zv);
    rep.per_sample_values.push_back(val);
    value_acc += val;

    double b = 0.0;
    switch (baseline.kind) {
      case BaselineConfig::Kind::kNone:
        break;
      case BaselineConfig::Kind::kConstant:
        b = baseline.constant;
        break;
      case BaselineConfig::Kind::kEma:
        b = baseline.ema_initialized ? baseline.ema_state : 0.0;
        break;
      case BaselineConfig::Kind::kSelfCritic:
        b = critic;
        break;
      case BaselineConfig::Kind::kSampleCritic: {
        Structure zp = domain.sample_gibbs(scores, rng);
        b = g(to_vec(zp));
        break;
      }
    }
    Vec c(zv.size());
    for (std::size_t j = 0; j < zv.size(); ++j)
      c[j] = (val - b) * (zv[j] - mu[j]);
    contribs.push_back(std::move(c));
  }
  finalize_moments(contribs, rep);
  rep.value = value_acc / samples;
  rep.decoder_calls = g.call_count() - calls_before;
  return rep;
}

EstimatorReport sum_and_sample(const StructDomain& domain, const Vec& scores,
                               const DownstreamFn& g, int summed, Rng& rng,
                               int tail_samples, std::size_t cap) {
  if (summed < 1) throw std::invalid_argument("sum_and_sample: m < 1");
  if (tail_samples < 1)
    throw std::invalid_argument("sum_and_sample: tail_samples < 1");

  SparseDist dist = gibbs_enum(domain, scores, cap);
  const int total = static_cast<int>(dist.support.size());
  if (summed >= total) return explicit_marginal(domain, scores, g, cap);
  if (!domain.has_sampler())
    throw UnsupportedCapability(domain.name() + ": no exact sampler");

  long calls_before = g.call_count();
  const int p = domain.part_count();
  Vec mu(p, 0.0);
  for (int i = 0; i < total; ++i) {
    Vec zv = to_vec(dist.support[i]);
    for (int j = 0; j < p; ++j) mu[j] += dist.weights[i] * zv[j];
  }

  // Highest-probability structures first (probability is monotone in score;
  // enumeration order breaks exact ties deterministically).
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dist.weights[a] > dist.weights[b];
  });

  std::set<std::vector<std::uint8_t>> topset;
  Vec exact_grad(p, 0.0);
  double exact_value = 0.0, top_mass = 0.0;
  EstimatorReport rep;
  for (int r = 0; r < summed; ++r) {
    const Structure& z = dist.support[order[r]];
    double w = dist.weights[order[r]];
    double val = g(to_vec(z));
    rep.per_sample_values.push_back(val);
    exact_value += w * val;
    top_mass += w;
    Vec zv = to_vec(z);
    for (int j = 0; j < p; ++j) exact_grad[j] += val * w * (zv[j] - mu[j]);
    topset.insert(z.bits);
  }

  // Tail term: (1 - P_top) E_tail[ g(Z) d log Pr(Z)/ds ], sampled from the
  // renormalized tail by rejection.
  const double tail_mass = 1.0 - top_mass;
  std::vector<Vec> contribs;
  double tail_value_acc = 0.0;
  const long max_tries = 200000L * tail_samples + 1000;
  long tries = 0;
  for (int i = 0; i < tail_samples; ++i) {
    Structure z;
    while (true) {
      if (++tries > max_tries)
        throw std::runtime_error(
            "sum_and_sample: rejection sampling exhausted (top mass ~1)");
      z = domain.sample_gibbs(scores, rng);
      if (!topset.count(z.bits)) break;
    }
    Vec zv = to_vec(z);
    double val = g(zv);
    rep.per_sample_values.push_back(val);
    tail_value_acc += val;
    Vec c(p);
    for (int j = 0; j < p; ++j)
      c[j] = tail_mass * val * (zv[j] - mu[j]);
    contribs.push_back(std::move(c));
  }
  finalize_moments(contribs, rep);
  for (int j = 0; j < p; ++j) rep.gradient[j] += exact_grad[j];
  rep.value = exact_value + tail_mass * tail_value_acc / tail_samples;
  rep.decoder_calls = g.call_count() - calls_before;
  return rep;
}

Structure gumbel_max_sample(const Vec& scores, Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("gumbel_max_sample: empty");
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument("gumbel_max_sample: scores must be finite");
    double v = scores[i] + rng.gumbel();
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  Structure z;
  z.bits.assign(scores.size(), 0);
  z.bits[best] = 1;
  return z;
}

DiffVec gumbel_softmax(const Vec& scores, double gamma, Rng& rng) {
  if (gamma <= 0.0) throw std::invalid_argument("gumbel_softmax: gamma <= 0");
  Vec shifted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    shifted[i] = (scores[i] + rng.gumbel()) / gamma;
  Vec z = softmax(shifted);
  double inv_gamma = 1.0 / gamma;
  return DiffVec{z,
                 [z, inv_gamma](const Vec& v) {
                   Vec out = softmax_pullback(z, v);
                   for (double& x : out) x *= inv_gamma;
                   return out;
                 },
                 true};
}

DiffStruct st_gumbel(const Vec& scores, double gamma, Rng& rng) {
  if (gamma <= 0.0) throw std::invalid_argument("st_gumbel: gamma <= 0");
  Vec noisy(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    noisy[i] = scores[i] + rng.gumbel();
  int best = 0;
  for (std::size_t i = 1; i < noisy.size(); ++i)
    if (noisy[i] > noisy[best]) best = static_cast<int>(i);
  Structure z;
  z.bits.assign(scores.size(), 0);
  z.bits[best] = 1;

  Vec relaxed(noisy.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) relaxed[i] = noisy[i] / gamma;
  Vec soft = softmax(relaxed);
  double inv_gamma = 1.0 / gamma;
  return DiffStruct{z,
                    [soft, inv_gamma](const Vec& v) {
                      Vec out = softmax_pullback(soft, v);
                      for (double& x : out) x *= inv_gamma;
                      return out;
                    },
                    false};
}

Structure perturb_and_map(const StructDomain& domain, const Vec& scores,
                          double noise_scale, Rng& rng) {
  if (noise_scale < 0.0)
    throw std::invalid_argument("perturb_and_map: negative scale");
  Vec perturbed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    perturbed[i] = scores[i] + noise_scale * rng.gumbel();
  return argmax_oracle(domain, perturbed);
}

EstimatorReport sparsemax_marginal(const StructDomain& domain,
                                   const Vec& scores, const DownstreamFn& g,
                                   int topk, std::size_t cap) {
  std::vector<Structure> all = enumerate_structures(domain, cap);
  const int total = static_cast<int>(all.size());
  const int p = domain.part_count();
  Vec f(total);
  for (int i = 0; i < total; ++i) f[i] = score_of(all[i], scores);

  EntmaxSolution sol = topk > 0 ? topk_sparsemax(f, std::min(topk, total))
                                : sparsemax(f);

  long calls_before = g.call_count();
  EstimatorReport rep;
  rep.gradient.assign(p, 0.0);
  Vec support_vals(sol.support.size());
  double val_sum = 0.0;
  for (std::size_t r = 0; r < sol.support.size(); ++r) {
    int i = sol.support[r];
    double val = g(to_vec(all[i]));
    support_vals[r] = val;
    rep.per_sample_values.push_back(val);
    rep.value += sol.probs[i] * val;
    val_sum += val;
  }
  // d value / d s through the sparsemax Jacobian over structure scores:
  // support rows of J are (I - 11^T/|S|).
  double mean_val = val_sum / static_cast<double>(sol.support.size());
  for (std::size_t r = 0; r < sol.support.size(); ++r) {
    double coeff = support_vals[r] - mean_val;
    const Structure& z = all[sol.support[r]];
    for (int j = 0; j < p; ++j)
      if (z.bits[j]) rep.gradient[j] += coeff;
  }
  rep.grad_stderr.assign(p, 0.0);
  rep.variance = 0.0;
  rep.decoder_calls = g.call_count() - calls_before;
  return rep;
}

EstimatorReport sparsemap_marginal(const StructDomain& domain,
                                   const Vec& scores, const DownstreamFn& g,
                                   bool random_init, Rng* rng) {
  if (random_init && !rng)
    throw std::invalid_argument("sparsemap_marginal: random_init needs an rng");
  SparseMapResult res =
      sparsemap(domain, scores, 100, 1e-9, random_init ? rng : nullptr);

  long calls_before = g.call_count();
  EstimatorReport rep;
  rep.converged = res.converged;
  Vec vals(res.active_set.support.size());
  for (std::size_t i = 0; i < res.active_set.support.size(); ++i) {
    vals[i] = g(to_vec(res.active_set.support[i]));
    rep.per_sample_values.push_back(vals[i]);
    rep.value += res.active_set.weights[i] * vals[i];
  }
  rep.gradient = res.alpha_weighted_grad(vals);
  rep.grad_stderr.assign(domain.part_count(), 0.0);
  rep.variance = 0.0;
  rep.decoder_calls = g.call_count() - calls_before;
  return rep;
}

double rectified_sample(const RectifiedBase& base, Rng& rng) {
  double u = 0.0;
  switch (base.kind) {
    case RectifiedBase::Kind::kGaussian:
      if (base.sigma < 0.0)
        throw std::invalid_argument("rectified_sample: sigma < 0");
      u = base.mean + base.sigma * rng.gaussian();
      break;
    case RectifiedBase::Kind::kStretchedConcrete: {
      if (base.beta <= 0.0)
        throw std::invalid_argument("rectified_sample: beta <= 0");
      if (!(base.low < 0.0 && base.high > 1.0))
        throw std::invalid_argument(
            "rectified_sample: stretch must cover [0,1] properly");
      double r = rng.uniform_pos();
      double logistic = std::log(r) - std::log1p(-r);
      double x = 1.0 / (1.0 + std::exp(-(logistic + base.log_alpha) / base.beta));
      u = x * (base.high - base.low) + base.low;
      break;
    }
  }
  return std::max(0.0, std::min(1.0, u));
}

Vec gaussian_sparsemax_sample(const Vec& scores, double sigma, Rng& rng) {
  if (sigma < 0.0)
    throw std::invalid_argument("gaussian_sparsemax_sample: sigma < 0");
  Vec noisy(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    noisy[i] = scores[i] + sigma * rng.gaussian();
  return sparsemax(noisy).probs;
}

SfeSurrogate sfe_surrogate_tape(const StructDomain& domain, const Vec& scores,
                                const std::vector<Structure>& samples,
                                const Vec& sample_values, double baseline,
                                std::size_t cap) {
  if (samples.size() != sample_values.size())
    throw std::invalid_argument("sfe_surrogate_tape: size mismatch");
  if (samples.empty())
    throw std::invalid_argument("sfe_surrogate_tape: no samples");
  std::vector<Structure> all = enumerate_structures(domain, cap);

  Tape tape;
  std::vector<int> leaf_ids;
  for (double x : scores) leaf_ids.push_back(tape.leaf(x));
  auto var = [&tape](int id) { return TVar(tape, id); };

  // logZ = lse over all structures of <z, s>.
  TVar logz;
  bool first = true;
  for (const Structure& z : all) {
    TVar acc(tape, tape.leaf(0.0));
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (z.bits[j]) acc = acc + var(leaf_ids[j]);
    logz = first ? acc : logaddexp(logz, acc);
    first = false;
  }

  TVar total(tape, tape.leaf(0.0));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    TVar zscore(tape, tape.leaf(0.0));
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (samples[i].bits[j]) zscore = zscore + var(leaf_ids[j]);
    TVar logp = zscore - logz;
    // stopgrad(g - b) * log Pr(z | s), plus the constant g term that only
    // matters for decoder-side parameters.
    TVar weight(tape,
                tape.stop_gradient(tape.leaf(sample_values[i] - baseline)));
    total = total + weight * logp + sample_values[i];
  }
  total = total * (1.0 / static_cast<double>(samples.size()));

  std::vector<double> adj = tape.gradient(total.i);
  SfeSurrogate out;
  out.surrogate_value = total.value();
  out.grad_scores.resize(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j)
    out.grad_scores[j] = adj[leaf_ids[j]];
  return out;
}

}  // namespace latstruct
