#include "latstruct/sparsemap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latstruct {

namespace {

using Mat = Eigen::MatrixXd;
using EVec = Eigen::VectorXd;

// Solves the equality-constrained restricted QP
//   [Z^T Z  1] [beta  ]   [rhs]
//   [1^T    0] [lambda] = [r0 ]
// Returns false when the KKT matrix is numerically singular.
bool kkt_solve(const std::vector<Vec>& verts, const EVec& rhs, double r0,
               EVec& beta) {
  const int k = static_cast<int>(verts.size());
  Mat M = Mat::Zero(k + 1, k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      double g = dot(verts[i], verts[j]);
      M(i, j) = g;
      M(j, i) = g;
    }
    M(i, k) = 1.0;
    M(k, i) = 1.0;
  }
  EVec full_rhs(k + 1);
  full_rhs.head(k) = rhs;
  full_rhs(k) = r0;
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible()) return false;
  EVec sol = lu.solve(full_rhs);
  beta = sol.head(k);
  return beta.allFinite();
}

Vec combine(const std::vector<Vec>& verts, const EVec& alpha) {
  Vec mu(verts[0].size(), 0.0);
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t p = 0; p < mu.size(); ++p)
      mu[p] += alpha(static_cast<int>(i)) * verts[i][p];
  return mu;
}

}  // namespace

SparseMapResult sparsemap(const StructDomain& domain, const Vec& scores,
                          int max_iter, double tol, Rng* init_rng) {
  if (static_cast<int>(scores.size()) != domain.part_count())
    throw std::invalid_argument("sparsemap: score length mismatch");

  auto objective = [&scores](const Vec& mu) {
    return dot(mu, scores) - 0.5 * dot(mu, mu);
  };

  Structure z0;
  if (init_rng) {
    Vec noise(scores.size());
    for (double& x : noise) x = init_rng->gumbel();
    z0 = domain.map_oracle(noise);
  } else {
    z0 = domain.map_oracle(scores);
  }

  std::vector<Structure> active{z0};
  std::vector<Vec> verts{to_vec(z0)};
  EVec alpha(1);
  alpha(0) = 1.0;
  Vec mu = verts[0];

  SparseMapResult res;
  res.objective_trace.push_back(objective(mu));
  double gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  int outer = 0;
  const double drop_tol = 1e-12;

  for (outer = 0; outer < max_iter; ++outer) {
    Vec grad = sub(scores, mu);  // gradient of the objective at mu
    Structure znew = domain.map_oracle(grad);
    Vec znew_v = to_vec(znew);
    gap = dot(znew_v, grad) - dot(mu, grad);
    if (gap <= tol) {
      converged = true;
      break;
    }
    bool known = false;
    for (const Structure& z : active)
      if (z == znew) known = true;
    if (known) {
      // The oracle cannot improve further; numerically converged.
      converged = gap <= std::max(tol, 1e-7);
      break;
    }

    active.push_back(znew);
    verts.push_back(std::move(znew_v));
    EVec cur = EVec::Zero(static_cast<int>(verts.size()));
    cur.head(alpha.size()) = alpha;
    alpha = cur;

    // Minor cycle: move toward the affine-hull optimum, clipping at the
    // simplex boundary and dropping vertices that hit zero.
    while (true) {
      const int k = static_cast<int>(verts.size());
      EVec rhs(k);
      for (int i = 0; i < k; ++i) rhs(i) = dot(verts[i], scores);
      EVec beta;
      if (!kkt_solve(verts, rhs, 1.0, beta)) {
        // Degenerate set: drop the newest vertex and stop improving.
        active.pop_back();
        verts.pop_back();
        alpha.conservativeResize(k - 1);
        break;
      }
      bool feasible = true;
      for (int i = 0; i < k; ++i)
        if (beta(i) < -1e-14) feasible = false;
      if (feasible) {
        alpha = beta.cwiseMax(0.0);
        alpha /= alpha.sum();
        break;
      }
      double theta = 1.0;
      for (int i = 0; i < k; ++i)
        if (beta(i) < alpha(i))
          theta = std::min(theta, alpha(i) / (alpha(i) - beta(i)));
      alpha = alpha + theta * (beta - alpha);
      // Drop zeroed vertices.
      std::vector<Structure> kept_a;
      std::vector<Vec> kept_v;
      std::vector<double> kept_w;
      for (int i = 0; i < k; ++i) {
        if (alpha(i) > drop_tol) {
          kept_a.push_back(active[i]);
          kept_v.push_back(verts[i]);
          kept_w.push_back(alpha(i));
        }
      }
      active = std::move(kept_a);
      verts = std::move(kept_v);
      alpha = EVec::Zero(static_cast<int>(kept_w.size()));
      for (std::size_t i = 0; i < kept_w.size(); ++i) alpha(i) = kept_w[i];
      alpha /= alpha.sum();
    }

    mu = combine(verts, alpha);
    double obj = objective(mu);
    double improvement = obj - res.objective_trace.back();
    res.objective_trace.push_back(obj);
    if (improvement < 1e-9 && outer > 0) {
      converged = true;
      ++outer;
      break;
    }
  }

  // Final tidy-up of the witness distribution.
  SparseDist dist;
  double wsum = 0.0;
  for (int i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > drop_tol) {
      dist.support.push_back(active[i]);
      dist.weights.push_back(alpha(i));
      wsum += alpha(i);
    }
  }
  for (double& w : dist.weights) w /= wsum;
  std::vector<Vec> final_verts;
  for (const Structure& z : dist.support) final_verts.push_back(to_vec(z));
  mu = Vec(scores.size(), 0.0);
  for (std::size_t i = 0; i < final_verts.size(); ++i)
    for (std::size_t p = 0; p < mu.size(); ++p)
      mu[p] += dist.weights[i] * final_verts[i][p];

  res.mu = mu;
  res.active_set = dist;
  res.iterations = outer;
  res.gap = gap;
  res.converged = converged || gap <= tol;

  auto solve_beta = [final_verts](const EVec& rhs) {
    EVec beta;
    if (!kkt_solve(final_verts, rhs, 0.0, beta)) {
      const int k = static_cast<int>(final_verts.size());
      // Degenerate support: fall back to a least-squares generalized solve.
      Mat M = Mat::Zero(k + 1, k + 1);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) M(i, j) = dot(final_verts[i], final_verts[j]);
        M(i, k) = 1.0;
        M(k, i) = 1.0;
      }
      EVec full_rhs(k + 1);
      full_rhs.head(k) = rhs;
      full_rhs(k) = 0.0;
      beta = M.completeOrthogonalDecomposition().solve(full_rhs).head(k);
    }
    return beta;
  };

  res.pullback = [final_verts, solve_beta](const Vec& v) {
    const int k = static_cast<int>(final_verts.size());
    EVec rhs(k);
    for (int i = 0; i < k; ++i) rhs(i) = dot(final_verts[i], v);
    EVec beta = solve_beta(rhs);
    Vec out(final_verts[0].size(), 0.0);
    for (int i = 0; i < k; ++i)
      for (std::size_t p = 0; p < out.size(); ++p)
        out[p] += beta(i) * final_verts[i][p];
    return out;
  };

  res.alpha_weighted_grad = [final_verts, solve_beta](const Vec& coeffs) {
    const int k = static_cast<int>(final_verts.size());
    if (static_cast<int>(coeffs.size()) != k)
      throw std::invalid_argument(
          "alpha_weighted_grad: one coefficient per support structure");
    EVec rhs(k);
    for (int i = 0; i < k; ++i) rhs(i) = coeffs[i];
    EVec beta = solve_beta(rhs);
    Vec out(final_verts[0].size(), 0.0);
    for (int i = 0; i < k; ++i)
      for (std::size_t p = 0; p < out.size(); ++p)
        out[p] += beta(i) * final_verts[i][p];
    return out;
  };

  return res;
}

Vec project_marginal_polytope(const StructDomain& domain, const Vec& point,
                              int max_iter, double tol) {
  return sparsemap(domain, point, max_iter, tol).mu;
}

}  // namespace latstruct
