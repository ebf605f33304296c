#include "latstruct/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "latstruct/simplex.hpp"
#include "latstruct/tape.hpp"

namespace latstruct {

Vec to_vec(const Structure& z) {
  Vec v(z.bits.size());
  for (std::size_t i = 0; i < z.bits.size(); ++i) v[i] = z.bits[i] ? 1.0 : 0.0;
  return v;
}

double score_of(const Structure& z, const Vec& s) {
  if (z.bits.size() != s.size())
    throw std::invalid_argument("score_of: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (z.bits[i]) acc += s[i];
  return acc;
}

void StructDomain::check_scores(const Vec& scores) const {
  if (static_cast<int>(scores.size()) != part_count())
    throw std::invalid_argument(name() + ": score vector has length " +
                                std::to_string(scores.size()) + ", expected " +
                                std::to_string(part_count()));
}

std::vector<Structure> StructDomain::enumerate_unsorted() const {
  throw UnsupportedCapability(name() + ": not enumerable");
}

std::pair<Vec, double> StructDomain::marginals(const Vec&) const {
  throw UnsupportedCapability(name() + ": no marginal oracle");
}

DiffVec StructDomain::diff_marginals(const Vec&) const {
  throw UnsupportedCapability(name() + ": no differentiable marginal oracle");
}

Structure StructDomain::sample_gibbs(const Vec&, Rng&) const {
  throw UnsupportedCapability(name() + ": no exact sampler");
}

Vec StructDomain::logprob_grad(const Vec& scores, const Structure& z) const {
  auto [mu, logz] = marginals(scores);
  (void)logz;
  Vec g = to_vec(z);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= mu[i];
  return g;
}

std::vector<Structure> enumerate_structures(const StructDomain& domain,
                                            std::size_t cap) {
  if (!domain.enumerable())
    throw UnsupportedCapability(domain.name() + ": not enumerable");
  double est = domain.structure_count();
  if (est > static_cast<double>(cap))
    throw EnumerationCapExceeded(domain.name() + ": ~" + std::to_string(est) +
                                 " structures exceeds cap " +
                                 std::to_string(cap));
  std::vector<Structure> all = domain.enumerate_unsorted();
  std::sort(all.begin(), all.end());
  return all;
}

Structure argmax_oracle(const StructDomain& domain, const Vec& scores) {
  if (static_cast<int>(scores.size()) != domain.part_count())
    throw std::invalid_argument("argmax_oracle: score length mismatch");
  return domain.map_oracle(scores);
}

SparseDist gibbs_enum(const StructDomain& domain, const Vec& scores,
                      std::size_t cap) {
  std::vector<Structure> all = enumerate_structures(domain, cap);
  Vec logw(all.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    logw[i] = score_of(all[i], scores);
  double logz = logsumexp(logw);
  SparseDist dist;
  dist.support = std::move(all);
  dist.weights.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i)
    dist.weights[i] = std::exp(logw[i] - logz);
  return dist;
}

double gibbs_enum_logz(const StructDomain& domain, const Vec& scores,
                       std::size_t cap) {
  std::vector<Structure> all = enumerate_structures(domain, cap);
  Vec logw(all.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    logw[i] = score_of(all[i], scores);
  return logsumexp(logw);
}

// ---------------------------------------------------------------------------
// One-of-K

OneOfKDomain::OneOfKDomain(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("OneOfKDomain: k < 1");
}

bool OneOfKDomain::is_valid(const Structure& z) const {
  if (static_cast<int>(z.bits.size()) != k_) return false;
  int on = 0;
  for (auto b : z.bits) on += b ? 1 : 0;
  return on == 1;
}

Structure OneOfKDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  int best = 0;
  for (int i = 1; i < k_; ++i)
    if (scores[i] > scores[best]) best = i;
  Structure z;
  z.bits.assign(k_, 0);
  z.bits[best] = 1;
  return z;
}

std::vector<Structure> OneOfKDomain::enumerate_unsorted() const {
  std::vector<Structure> all(k_);
  for (int i = 0; i < k_; ++i) {
    all[i].bits.assign(k_, 0);
    all[i].bits[i] = 1;
  }
  return all;
}

std::pair<Vec, double> OneOfKDomain::marginals(const Vec& scores) const {
  check_scores(scores);
  return {softmax(scores), logsumexp(scores)};
}

DiffVec OneOfKDomain::diff_marginals(const Vec& scores) const {
  check_scores(scores);
  Vec z = softmax(scores);
  return DiffVec{z, [z](const Vec& v) { return softmax_pullback(z, v); }, true};
}

Structure OneOfKDomain::sample_gibbs(const Vec& scores, Rng& rng) const {
  check_scores(scores);
  Vec p = softmax(scores);
  int i = rng.categorical(p);
  Structure z;
  z.bits.assign(k_, 0);
  z.bits[i] = 1;
  return z;
}

// ---------------------------------------------------------------------------
// Bit vector

BitVectorDomain::BitVectorDomain(int d) : d_(d) {
  if (d < 1) throw std::invalid_argument("BitVectorDomain: d < 1");
}

bool BitVectorDomain::is_valid(const Structure& z) const {
  return static_cast<int>(z.bits.size()) == d_;
}

Structure BitVectorDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  Structure z;
  z.bits.resize(d_);
  for (int i = 0; i < d_; ++i) z.bits[i] = scores[i] > 0.0 ? 1 : 0;
  return z;
}

double BitVectorDomain::structure_count() const {
  return std::pow(2.0, d_);
}

std::vector<Structure> BitVectorDomain::enumerate_unsorted() const {
  std::vector<Structure> all;
  all.reserve(1u << d_);
  for (std::uint64_t m = 0; m < (1ull << d_); ++m) {
    Structure z;
    z.bits.resize(d_);
    for (int i = 0; i < d_; ++i) z.bits[i] = (m >> i) & 1u;
    all.push_back(std::move(z));
  }
  return all;
}

std::pair<Vec, double> BitVectorDomain::marginals(const Vec& scores) const {
  check_scores(scores);
  Vec mu(d_);
  double logz = 0.0;
  for (int i = 0; i < d_; ++i) {
    // P(z_i = 1) = sigmoid(s_i); logZ factorizes over coordinates.
    mu[i] = 1.0 / (1.0 + std::exp(-scores[i]));
    logz += logaddexp(0.0, scores[i]);
  }
  return {mu, logz};
}

DiffVec BitVectorDomain::diff_marginals(const Vec& scores) const {
  auto [mu, logz] = marginals(scores);
  (void)logz;
  Vec m = mu;
  return DiffVec{m,
                 [m](const Vec& v) {
                   Vec out(m.size());
                   for (std::size_t i = 0; i < m.size(); ++i)
                     out[i] = m[i] * (1.0 - m[i]) * v[i];
                   return out;
                 },
                 true};
}

Structure BitVectorDomain::sample_gibbs(const Vec& scores, Rng& rng) const {
  check_scores(scores);
  Structure z;
  z.bits.resize(d_);
  for (int i = 0; i < d_; ++i) {
    double p1 = 1.0 / (1.0 + std::exp(-scores[i]));
    z.bits[i] = rng.uniform() < p1 ? 1 : 0;
  }
  return z;
}

}  // namespace latstruct
