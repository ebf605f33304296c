#include "latstruct/relax.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "latstruct/tape.hpp"

namespace latstruct {

DiffVec marginal_layer(const StructDomain& domain, const Vec& scores) {
  if (!domain.has_marginals())
    throw UnsupportedCapability(domain.name() + ": no marginal oracle");
  return domain.diff_marginals(scores);
}

SinkhornResult sinkhorn(const Tensor& scores, double gamma, double tol,
                        int max_iter) {
  if (gamma <= 0.0) throw std::invalid_argument("sinkhorn: gamma <= 0");
  if (scores.shape.size() != 2 || scores.rows() != scores.cols())
    throw std::invalid_argument("sinkhorn: scores must be a square matrix");
  scores.check_entries("sinkhorn");
  const int m = scores.rows();

  auto tape = std::make_shared<Tape>();
  std::vector<int> leaf_ids(m * m);
  std::vector<TVar> K(m * m);
  for (int i = 0; i < m * m; ++i) {
    leaf_ids[i] = tape->leaf(scores.data[i]);
    K[i] = TVar(*tape, leaf_ids[i]) * (1.0 / gamma);
  }

  auto zero = [&] { return TVar(*tape, tape->leaf(0.0)); };
  std::vector<TVar> u(m, zero()), v(m, zero());

  auto deviation = [&]() {
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < m; ++j) {
        rs += std::exp(K[i * m + j].value() + u[i].value() + v[j].value());
        cs += std::exp(K[j * m + i].value() + u[j].value() + v[i].value());
      }
      worst = std::max(worst, std::fabs(rs - 1.0));
      worst = std::max(worst, std::fabs(cs - 1.0));
    }
    return worst;
  };

  bool converged = false;
  int it = 0;
  for (it = 0; it < max_iter; ++it) {
    for (int i = 0; i < m; ++i) {
      TVar acc = K[i * m] + v[0];
      for (int j = 1; j < m; ++j) acc = logaddexp(acc, K[i * m + j] + v[j]);
      u[i] = -acc;
    }
    for (int j = 0; j < m; ++j) {
      TVar acc = K[j] + u[0];
      for (int i = 1; i < m; ++i) acc = logaddexp(acc, K[i * m + j] + u[i]);
      v[j] = -acc;
    }
    if (deviation() < tol) {
      converged = true;
      ++it;
      break;
    }
  }

  std::vector<int> out_ids(m * m);
  Tensor P = Tensor::matrix(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      TVar pij = exp(K[i * m + j] + u[i] + v[j]);
      out_ids[i * m + j] = pij.i;
      P.at(i, j) = pij.value();
    }

  SinkhornResult res;
  res.transport = P;
  res.converged = converged;
  res.iterations = it;
  res.pullback = [tape, out_ids, leaf_ids, m](const Tensor& cot) {
    if (cot.shape.size() != 2 || cot.rows() != m || cot.cols() != m)
      throw std::invalid_argument("sinkhorn pullback: shape mismatch");
    std::vector<std::pair<int, double>> seeds;
    for (int i = 0; i < m * m; ++i)
      if (cot.data[i] != 0.0) seeds.push_back({out_ids[i], cot.data[i]});
    std::vector<double> adj = tape->gradient_multi(seeds);
    Tensor out = Tensor::matrix(m, m);
    for (int i = 0; i < m * m; ++i) out.data[i] = adj[leaf_ids[i]];
    return out;
  };
  return res;
}

PerturbedArgmax perturbed_argmax(const StructDomain& domain, const Vec& scores,
                                 double noise_scale, int samples, Rng& rng,
                                 NoiseKind kind) {
  if (samples < 1) throw std::invalid_argument("perturbed_argmax: M < 1");
  if (noise_scale < 0.0)
    throw std::invalid_argument("perturbed_argmax: negative noise scale");
  const int p = domain.part_count();
  if (static_cast<int>(scores.size()) != p)
    throw std::invalid_argument("perturbed_argmax: score length mismatch");

  Vec mean(p, 0.0);
  // Sufficient statistic for the pullback: C = sum_i psi(U_i) z_i^T, where
  // psi is -grad log density of the noise.
  std::vector<Vec> corr(p, Vec(p, 0.0));

  for (int i = 0; i < samples; ++i) {
    Vec noise(p);
    for (double& x : noise)
      x = kind == NoiseKind::kGumbel ? rng.gumbel() : rng.gaussian();
    Vec perturbed(p);
    for (int j = 0; j < p; ++j)
      perturbed[j] = scores[j] + noise_scale * noise[j];
    Structure z = domain.map_oracle(perturbed);
    Vec zv = to_vec(z);
    for (int j = 0; j < p; ++j) mean[j] += zv[j];
    if (noise_scale > 0.0) {
      for (int a = 0; a < p; ++a) {
        double psi = kind == NoiseKind::kGumbel
                         ? 1.0 - std::exp(-noise[a])
                         : noise[a];
        for (int b = 0; b < p; ++b) corr[a][b] += psi * zv[b];
      }
    }
  }
  for (double& x : mean) x /= samples;

  PerturbedArgmax out;
  out.mean = mean;
  double denom = noise_scale > 0.0 ? noise_scale * samples : 1.0;
  bool flat = noise_scale == 0.0;
  out.pullback = [corr, denom, flat, p](const Vec& v) {
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument("perturbed_argmax pullback: size mismatch");
    Vec g(p, 0.0);
    if (flat) return g;  // MAP vertex is locally constant
    for (int a = 0; a < p; ++a) {
      double acc = 0.0;
      for (int b = 0; b < p; ++b) acc += corr[a][b] * v[b];
      g[a] = acc / denom;
    }
    return g;
  };
  return out;
}

}  // namespace latstruct
