#include "latstruct/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace latstruct {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Indices of unmasked entries; throws if none remain.
std::vector<int> unmasked(const Vec& s, const char* who) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (!is_neg_inf(s[i])) idx.push_back(i);
  if (idx.empty())
    throw std::invalid_argument(std::string(who) + ": empty support (all entries masked)");
  return idx;
}

void fill_support(EntmaxSolution& sol) {
  sol.support.clear();
  for (int i = 0; i < static_cast<int>(sol.probs.size()); ++i)
    if (sol.probs[i] > 0.0) sol.support.push_back(i);
}

// Sort-based sparsemax on a dense vector (no masks).
EntmaxSolution sparsemax_dense(const Vec& s) {
  const int k = static_cast<int>(s.size());
  Vec sorted = s;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int support_size = 0;
  for (int j = 0; j < k; ++j) {
    cum += sorted[j];
    double t = (cum - 1.0) / (j + 1);
    if (sorted[j] - t > 0.0) {
      support_size = j + 1;
      tau = t;
    }
  }
  EntmaxSolution sol;
  sol.alpha = 2.0;
  sol.tau = tau;
  sol.probs.resize(k);
  for (int i = 0; i < k; ++i) sol.probs[i] = std::max(0.0, s[i] - tau);
  // Threshold arithmetic can leave the sum a few ulps off 1.
  double total = std::accumulate(sol.probs.begin(), sol.probs.end(), 0.0);
  for (double& p : sol.probs) p /= total;
  fill_support(sol);
  (void)support_size;
  return sol;
}

}  // namespace

Vec softmax(const Vec& s) {
  std::vector<int> idx = unmasked(s, "softmax");
  double m = kNegInf;
  for (int i : idx) m = std::max(m, s[i]);
  Vec out(s.size(), 0.0);
  double total = 0.0;
  for (int i : idx) {
    out[i] = std::exp(s[i] - m);
    total += out[i];
  }
  for (int i : idx) out[i] /= total;
  return out;
}

Vec softmax_pullback(const Vec& z, const Vec& v) {
  if (z.size() != v.size())
    throw std::invalid_argument("softmax_pullback: size mismatch");
  double zv = dot(z, v);
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * (v[i] - zv);
  return out;
}

DiffVec softmax_layer(const Vec& s) {
  Vec z = softmax(s);
  return DiffVec{z, [z](const Vec& v) { return softmax_pullback(z, v); }, true};
}

EntmaxSolution sparsemax(const Vec& s) {
  std::vector<int> idx = unmasked(s, "sparsemax");
  Vec dense(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) dense[j] = s[idx[j]];
  EntmaxSolution inner = sparsemax_dense(dense);
  EntmaxSolution sol;
  sol.alpha = 2.0;
  sol.tau = inner.tau;
  sol.probs.assign(s.size(), 0.0);
  for (std::size_t j = 0; j < idx.size(); ++j) sol.probs[idx[j]] = inner.probs[j];
  fill_support(sol);
  return sol;
}

EntmaxSolution entmax_bisect(const Vec& s, double alpha, int iters) {
  if (alpha <= 1.0)
    throw std::invalid_argument("entmax_bisect: alpha must be > 1");
  if (iters < 1) throw std::invalid_argument("entmax_bisect: iters < 1");
  std::vector<int> idx = unmasked(s, "entmax_bisect");
  const int d = static_cast<int>(idx.size());
  const double am1 = alpha - 1.0;

  // Work with max-subtracted scores (the mapping is shift invariant); the
  // bracket below is the textbook one evaluated at max = 0.
  double mx = kNegInf;
  for (int i : idx) mx = std::max(mx, s[i]);
  Vec t(d);
  for (int j = 0; j < d; ++j) t[j] = am1 * (s[idx[j]] - mx);

  double lo = -1.0;                              // sum(lo) >= 1
  double hi = -std::pow(double(d), 1.0 - alpha);  // sum(hi) <= 1
  Vec p(d);
  auto eval_sum = [&](double tau) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      double u = t[j] - tau;
      p[j] = u > 0.0 ? std::pow(u, 1.0 / am1) : 0.0;
      acc += p[j];
    }
    return acc;
  };
  double tau = hi, sum = 0.0;
  for (int it = 0; it < iters; ++it) {
    tau = 0.5 * (lo + hi);
    sum = eval_sum(tau);
    if (sum < 1.0)
      hi = tau;
    else
      lo = tau;
  }
  sum = eval_sum(tau);

  EntmaxSolution sol;
  sol.alpha = alpha;
  // Report tau against the original scores: (a-1)s - tau' = (a-1)(s-mx) - tau.
  sol.tau = tau + am1 * mx;
  sol.probs.assign(s.size(), 0.0);
  for (int j = 0; j < d; ++j) sol.probs[idx[j]] = p[j] / sum;
  fill_support(sol);
  return sol;
}

Vec entmax_pullback(const EntmaxSolution& sol, const Vec& v) {
  if (sol.probs.size() != v.size())
    throw std::invalid_argument("entmax_pullback: size mismatch");
  Vec q(sol.probs.size(), 0.0);
  double qsum = 0.0, qv = 0.0;
  for (int i : sol.support) {
    q[i] = std::pow(sol.probs[i], 2.0 - sol.alpha);
    qsum += q[i];
    qv += q[i] * v[i];
  }
  Vec out(v.size(), 0.0);
  for (int i : sol.support) out[i] = q[i] * (v[i] - qv / qsum);
  return out;
}

DiffVec sparsemax_layer(const Vec& s) {
  EntmaxSolution sol = sparsemax(s);
  return DiffVec{sol.probs,
                 [sol](const Vec& v) { return entmax_pullback(sol, v); }, true};
}

DiffVec entmax_layer(const Vec& s, double alpha, int iters) {
  EntmaxSolution sol = entmax_bisect(s, alpha, iters);
  return DiffVec{sol.probs,
                 [sol](const Vec& v) { return entmax_pullback(sol, v); }, true};
}

EntmaxSolution topk_sparsemax(const Vec& s, int k) {
  const int n = static_cast<int>(s.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("topk_sparsemax: k out of range");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return s[a] > s[b]; });
  Vec masked(n, kNegInf);
  for (int j = 0; j < k; ++j) masked[order[j]] = s[order[j]];
  EntmaxSolution sol = sparsemax(masked);
  sol.exact = static_cast<int>(sol.support.size()) < k;
  return sol;
}

}  // namespace latstruct
