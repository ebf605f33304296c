#include "latstruct/arborescence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "latstruct/tape.hpp"

namespace latstruct {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct CleGraph {
  std::vector<std::vector<double>> w;                 // -inf where absent
  std::vector<std::vector<std::pair<int, int>>> orig;  // original (h, m)
  std::vector<std::vector<int>> rep;                  // original words per node
};

std::vector<std::pair<int, int>> cle_recurse(const CleGraph& g) {
  const int n = static_cast<int>(g.w.size());

  std::vector<int> pred(n, -1);
  for (int v = 1; v < n; ++v) {
    double best = kNegInf;
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      if (g.w[u][v] > best) {
        best = g.w[u][v];
        pred[v] = u;
      }
    }
    if (pred[v] < 0)
      throw std::runtime_error("chu_liu_edmonds: node with no incoming arc");
  }

  // Look for a cycle in the best-incoming graph.
  std::vector<int> color(n, 0);
  std::vector<int> cycle;
  color[0] = 2;
  for (int start = 1; start < n && cycle.empty(); ++start) {
    if (color[start]) continue;
    std::vector<int> path;
    int v = start;
    while (v != -1 && color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = pred[v];
    }
    if (v != -1 && color[v] == 1) {
      auto it = std::find(path.begin(), path.end(), v);
      cycle.assign(it, path.end());
    }
    for (int u : path) color[u] = 2;
  }

  if (cycle.empty()) {
    std::vector<std::pair<int, int>> arcs;
    for (int v = 1; v < n; ++v) arcs.push_back(g.orig[pred[v]][v]);
    return arcs;
  }

  std::vector<char> incyc(n, 0);
  for (int v : cycle) incyc[v] = 1;
  std::vector<int> newid(n, -1);
  int k = 0;
  for (int v = 0; v < n; ++v)
    if (!incyc[v]) newid[v] = k++;
  const int c = k;  // supernode

  CleGraph h;
  h.w.assign(k + 1, std::vector<double>(k + 1, kNegInf));
  h.orig.assign(k + 1, std::vector<std::pair<int, int>>(k + 1, {-1, -1}));
  h.rep.assign(k + 1, {});
  for (int v = 0; v < n; ++v)
    if (!incyc[v]) h.rep[newid[v]] = g.rep[v];
  for (int v : cycle)
    h.rep[c].insert(h.rep[c].end(), g.rep[v].begin(), g.rep[v].end());

  for (int u = 0; u < n; ++u) {
    if (incyc[u]) continue;
    for (int v = 0; v < n; ++v) {
      if (incyc[v] || u == v) continue;
      h.w[newid[u]][newid[v]] = g.w[u][v];
      h.orig[newid[u]][newid[v]] = g.orig[u][v];
    }
  }
  for (int u = 0; u < n; ++u) {
    if (incyc[u]) continue;
    // Entering the cycle at v costs the cycle arc into v its place.
    for (int v : cycle) {
      if (is_neg_inf(g.w[u][v])) continue;
      double adj = g.w[u][v] - g.w[pred[v]][v];
      if (adj > h.w[newid[u]][c]) {
        h.w[newid[u]][c] = adj;
        h.orig[newid[u]][c] = g.orig[u][v];
      }
    }
    for (int v : cycle) {
      if (is_neg_inf(g.w[v][u])) continue;
      if (g.w[v][u] > h.w[c][newid[u]]) {
        h.w[c][newid[u]] = g.w[v][u];
        h.orig[c][newid[u]] = g.orig[v][u];
      }
    }
  }

  std::vector<std::pair<int, int>> arcs = cle_recurse(h);

  // The arc entering the supernode names, via its original modifier, the
  // cycle node whose best-incoming arc is displaced.
  int broken = -1;
  for (const auto& [ho, mo] : arcs) {
    for (int v : cycle) {
      for (int w0 : g.rep[v])
        if (w0 == mo) broken = v;
    }
    (void)ho;
  }
  if (broken < 0)
    throw std::runtime_error("chu_liu_edmonds: lost the cycle-entering arc");
  for (int v : cycle)
    if (v != broken) arcs.push_back(g.orig[pred[v]][v]);
  return arcs;
}

// Laplacian-based marginals, generic over double / TVar. The max-subtraction
// constant is treated as fixed: logZ is identically invariant to it.
template <class S, class ConstFn>
void mtt_marginals_t(int n, const std::vector<S>& s, double shift, ConstFn cst,
                     std::vector<S>& mu, S& logz, double* cond_estimate) {
  auto part = [n](int h, int m) { return h * n + (m - 1); };

  // w(h, m) = exp(s - shift); Laplacian over modifiers 1..n with root weights
  // folded into the diagonal.
  std::vector<std::vector<S>> w(n + 1, std::vector<S>(n + 1, cst(0.0)));
  for (int h = 0; h <= n; ++h)
    for (int m = 1; m <= n; ++m) {
      if (h == m) continue;
      w[h][m] = exp(s[part(h, m)] + (-shift));
    }

  std::vector<std::vector<S>> L(n, std::vector<S>(n, cst(0.0)));
  for (int j = 1; j <= n; ++j) {
    S diag = w[0][j];
    for (int i = 1; i <= n; ++i)
      if (i != j) diag = diag + w[i][j];
    L[j - 1][j - 1] = diag;
    for (int i = 1; i <= n; ++i)
      if (i != j) L[i - 1][j - 1] = -w[i][j];
  }

  // Gauss-Jordan inverse with partial pivoting (pivot picked by value);
  // the product of pivots gives the determinant.
  std::vector<std::vector<S>> A = L;
  std::vector<std::vector<S>> B(n, std::vector<S>(n, cst(0.0)));
  for (int i = 0; i < n; ++i) B[i][i] = cst(1.0);
  S logdet = cst(0.0);
  double sign = 1.0;
  double norm_inf = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) row_sum += std::fabs(value_of(L[i][j]));
    norm_inf = std::max(norm_inf, row_sum);
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(value_of(A[r][col])) > std::fabs(value_of(A[piv][col])))
        piv = r;
    if (value_of(A[piv][col]) == 0.0)
      throw std::runtime_error("matrix_tree_marginals: singular Laplacian");
    if (piv != col) {
      std::swap(A[piv], A[col]);
      std::swap(B[piv], B[col]);
      sign = -sign;
    }
    S p = A[col][col];
    logdet = logdet + log(value_of(p) > 0.0 ? p : -p);
    if (value_of(p) < 0.0) sign = -sign;
    for (int j = 0; j < n; ++j) {
      A[col][j] = A[col][j] / p;
      B[col][j] = B[col][j] / p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      S f = A[r][col];
      if (value_of(f) == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        A[r][j] = A[r][j] - f * A[col][j];
        B[r][j] = B[r][j] - f * B[col][j];
      }
    }
  }
  if (sign < 0.0)
    throw std::runtime_error(
        "matrix_tree_marginals: negative determinant (degenerate weights)");

  if (cond_estimate) {
    double inv_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < n; ++j) row_sum += std::fabs(value_of(B[i][j]));
      inv_norm = std::max(inv_norm, row_sum);
    }
    *cond_estimate = norm_inf * inv_norm;
  }

  mu.assign((n + 1) * n, cst(0.0));
  for (int m = 1; m <= n; ++m) {
    mu[part(0, m)] = w[0][m] * B[m - 1][m - 1];
    for (int h = 1; h <= n; ++h) {
      if (h == m) continue;
      mu[part(h, m)] = w[h][m] * (B[m - 1][m - 1] - B[m - 1][h - 1]);
    }
  }
  logz = logdet + shift * n;
}

}  // namespace

ArborescenceDomain::ArborescenceDomain(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("ArborescenceDomain: n < 1");
}

Structure ArborescenceDomain::from_heads(const std::vector<int>& heads) const {
  if (static_cast<int>(heads.size()) != n_)
    throw std::invalid_argument("from_heads: wrong length");
  Structure z;
  z.bits.assign(part_count(), 0);
  for (int m = 1; m <= n_; ++m) z.bits[part_index(heads[m - 1], m, n_)] = 1;
  return z;
}

std::vector<int> ArborescenceDomain::to_heads(const Structure& z) const {
  std::vector<int> heads(n_, -1);
  for (int h = 0; h <= n_; ++h)
    for (int m = 1; m <= n_; ++m)
      if (h != m && z.bits[part_index(h, m, n_)]) heads[m - 1] = h;
  return heads;
}

bool ArborescenceDomain::is_valid(const Structure& z) const {
  if (static_cast<int>(z.bits.size()) != part_count()) return false;
  std::vector<int> heads(n_, -1);
  int on = 0;
  for (int h = 0; h <= n_; ++h)
    for (int m = 1; m <= n_; ++m) {
      if (!z.bits[part_index(h, m, n_)]) continue;
      if (h == m) return false;  // padding slot
      if (heads[m - 1] >= 0) return false;
      heads[m - 1] = h;
      ++on;
    }
  if (on != n_) return false;
  for (int m = 1; m <= n_; ++m) {
    // Every word must reach the root through its head chain.
    int v = m, steps = 0;
    while (v != 0) {
      v = heads[v - 1];
      if (v < 0 || ++steps > n_) return false;
    }
  }
  return true;
}

Structure ArborescenceDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  return from_heads(chu_liu_edmonds(scores, n_));
}

double ArborescenceDomain::structure_count() const {
  return std::pow(static_cast<double>(n_ + 1), n_ - 1);
}

std::vector<Structure> ArborescenceDomain::enumerate_unsorted() const {
  std::vector<Structure> all;
  std::vector<int> heads(n_, 0);
  while (true) {
    bool skip = false;
    for (int m = 1; m <= n_; ++m)
      if (heads[m - 1] == m) skip = true;
    if (!skip) {
      Structure z = from_heads(heads);
      if (is_valid(z)) all.push_back(std::move(z));
    }
    int i = n_ - 1;
    while (i >= 0 && ++heads[i] > n_) heads[i--] = 0;
    if (i < 0) break;
  }
  return all;
}

std::pair<Vec, double> ArborescenceDomain::marginals(const Vec& scores) const {
  check_scores(scores);
  return matrix_tree_marginals(scores, n_);
}

DiffVec ArborescenceDomain::diff_marginals(const Vec& scores) const {
  check_scores(scores);
  const int n = n_;
  double shift = kNegInf;
  for (int h = 0; h <= n; ++h)
    for (int m = 1; m <= n; ++m)
      if (h != m) shift = std::max(shift, scores[part_index(h, m, n)]);

  auto tape = std::make_shared<Tape>();
  std::vector<TVar> leaves;
  std::vector<int> leaf_ids;
  for (double x : scores) {
    int id = tape->leaf(x);
    leaf_ids.push_back(id);
    leaves.emplace_back(*tape, id);
  }
  std::vector<TVar> mu_vars;
  TVar logz;
  mtt_marginals_t<TVar>(
      n, leaves, shift,
      [&tape](double c) { return TVar(*tape, tape->leaf(c)); }, mu_vars, logz,
      nullptr);

  Vec mu(mu_vars.size());
  std::vector<int> mu_ids(mu_vars.size());
  for (std::size_t i = 0; i < mu_vars.size(); ++i) {
    mu[i] = mu_vars[i].value();
    mu_ids[i] = mu_vars[i].i;
  }
  auto pullback = [tape, mu_ids, leaf_ids](const Vec& v) {
    if (v.size() != mu_ids.size())
      throw std::invalid_argument("arborescence pullback: size mismatch");
    std::vector<std::pair<int, double>> seeds;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) seeds.push_back({mu_ids[i], v[i]});
    std::vector<double> adj = tape->gradient_multi(seeds);
    Vec out(leaf_ids.size());
    for (std::size_t i = 0; i < leaf_ids.size(); ++i) out[i] = adj[leaf_ids[i]];
    return out;
  };
  return DiffVec{mu, pullback, true};
}

std::vector<int> chu_liu_edmonds(const Vec& arc_scores, int n) {
  if (static_cast<int>(arc_scores.size()) != (n + 1) * n)
    throw std::invalid_argument("chu_liu_edmonds: score length mismatch");
  CleGraph g;
  g.w.assign(n + 1, std::vector<double>(n + 1, kNegInf));
  g.orig.assign(n + 1, std::vector<std::pair<int, int>>(n + 1, {-1, -1}));
  g.rep.assign(n + 1, {});
  for (int v = 0; v <= n; ++v) g.rep[v] = {v};
  for (int h = 0; h <= n; ++h)
    for (int m = 1; m <= n; ++m) {
      if (h == m) continue;
      g.w[h][m] = arc_scores[ArborescenceDomain::part_index(h, m, n)];
      g.orig[h][m] = {h, m};
    }
  std::vector<std::pair<int, int>> arcs = cle_recurse(g);
  std::vector<int> heads(n, -1);
  for (const auto& [h, m] : arcs) heads[m - 1] = h;
  return heads;
}

std::pair<Vec, double> matrix_tree_marginals(const Vec& arc_scores, int n) {
  if (static_cast<int>(arc_scores.size()) != (n + 1) * n)
    throw std::invalid_argument("matrix_tree_marginals: score length mismatch");

  double shift = kNegInf;
  for (int h = 0; h <= n; ++h)
    for (int m = 1; m <= n; ++m)
      if (h != m)
        shift = std::max(shift, arc_scores[ArborescenceDomain::part_index(h, m, n)]);

  // Assemble the Laplacian in ordinary space and factor it with Eigen.
  using Mat = Eigen::MatrixXd;
  Mat W = Mat::Zero(n + 1, n + 1);
  for (int h = 0; h <= n; ++h)
    for (int m = 1; m <= n; ++m)
      if (h != m)
        W(h, m) = std::exp(
            arc_scores[ArborescenceDomain::part_index(h, m, n)] - shift);
  Mat L = Mat::Zero(n, n);
  for (int j = 1; j <= n; ++j) {
    double diag = W(0, j);
    for (int i = 1; i <= n; ++i)
      if (i != j) diag += W(i, j);
    L(j - 1, j - 1) = diag;
    for (int i = 1; i <= n; ++i)
      if (i != j) L(i - 1, j - 1) = -W(i, j);
  }

  Eigen::PartialPivLU<Mat> lu(L);
  double det = lu.determinant();
  if (!(det > 0.0))
    throw std::runtime_error("matrix_tree_marginals: non-positive determinant");
  Mat B = lu.inverse();
  double cond = L.cwiseAbs().rowwise().sum().maxCoeff() *
                B.cwiseAbs().rowwise().sum().maxCoeff();
  if (cond > 1e12)
    throw std::runtime_error(
        "matrix_tree_marginals: numerically degenerate Laplacian (condition " +
        std::to_string(cond) + ")");

  Vec mu((n + 1) * n, 0.0);
  for (int m = 1; m <= n; ++m) {
    mu[ArborescenceDomain::part_index(0, m, n)] = W(0, m) * B(m - 1, m - 1);
    for (int h = 1; h <= n; ++h) {
      if (h == m) continue;
      mu[ArborescenceDomain::part_index(h, m, n)] =
          W(h, m) * (B(m - 1, m - 1) - B(m - 1, h - 1));
    }
  }
  return {mu, std::log(det) + shift * n};
}

}  // namespace latstruct
