#include "latstruct/chain.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "latstruct/tape.hpp"

namespace latstruct {

namespace {

// Forward-backward recursions, generic over double / TVar so the same code
// yields plain marginals and the tape-recorded differentiable ones.
template <class S, class ConstFn>
void chain_fb(int L, int T, const std::vector<S>& s, ConstFn cst,
              std::vector<S>& mu, S& logz) {
  auto part = [T](int i, int t, int t2) { return ((i - 1) * T + t) * T + t2; };

  std::vector<std::vector<S>> la(L, std::vector<S>(T, cst(0.0)));
  for (int i = 1; i < L; ++i)
    for (int t2 = 0; t2 < T; ++t2) {
      S acc = la[i - 1][0] + s[part(i, 0, t2)];
      for (int t = 1; t < T; ++t)
        acc = logaddexp(acc, la[i - 1][t] + s[part(i, t, t2)]);
      la[i][t2] = acc;
    }
  S lz = la[L - 1][0];
  for (int t = 1; t < T; ++t) lz = logaddexp(lz, la[L - 1][t]);

  std::vector<std::vector<S>> lb(L, std::vector<S>(T, cst(0.0)));
  for (int i = L - 2; i >= 0; --i)
    for (int t = 0; t < T; ++t) {
      S acc = s[part(i + 1, t, 0)] + lb[i + 1][0];
      for (int t2 = 1; t2 < T; ++t2)
        acc = logaddexp(acc, s[part(i + 1, t, t2)] + lb[i + 1][t2]);
      lb[i][t] = acc;
    }

  mu.assign((L - 1) * T * T, cst(0.0));
  for (int i = 1; i < L; ++i)
    for (int t = 0; t < T; ++t)
      for (int t2 = 0; t2 < T; ++t2) {
        int p = part(i, t, t2);
        mu[p] = exp(la[i - 1][t] + s[p] + lb[i][t2] - lz);
      }
  logz = lz;
}

}  // namespace

LinearChainDomain::LinearChainDomain(int length, int tags)
    : length_(length), tags_(tags) {
  if (length < 2) throw std::invalid_argument("LinearChainDomain: length < 2");
  if (tags < 1) throw std::invalid_argument("LinearChainDomain: tags < 1");
}

Structure LinearChainDomain::from_tags(const std::vector<int>& tags) const {
  if (static_cast<int>(tags.size()) != length_)
    throw std::invalid_argument("from_tags: wrong length");
  Structure z;
  z.bits.assign(part_count(), 0);
  for (int i = 1; i < length_; ++i)
    z.bits[part_index(i, tags[i - 1], tags[i], tags_)] = 1;
  return z;
}

std::vector<int> LinearChainDomain::to_tags(const Structure& z) const {
  if (!is_valid(z)) throw std::invalid_argument("to_tags: invalid structure");
  std::vector<int> tags(length_);
  for (int i = 1; i < length_; ++i)
    for (int t = 0; t < tags_; ++t)
      for (int t2 = 0; t2 < tags_; ++t2)
        if (z.bits[part_index(i, t, t2, tags_)]) {
          tags[i - 1] = t;
          tags[i] = t2;
        }
  return tags;
}

bool LinearChainDomain::is_valid(const Structure& z) const {
  if (static_cast<int>(z.bits.size()) != part_count()) return false;
  int prev = -1;
  for (int i = 1; i < length_; ++i) {
    int on = 0, from = -1, to = -1;
    for (int t = 0; t < tags_; ++t)
      for (int t2 = 0; t2 < tags_; ++t2)
        if (z.bits[part_index(i, t, t2, tags_)]) {
          ++on;
          from = t;
          to = t2;
        }
    if (on != 1) return false;
    if (prev >= 0 && from != prev) return false;
    prev = to;
  }
  return true;
}

Structure LinearChainDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  const int L = length_, T = tags_;
  std::vector<std::vector<double>> best(L, std::vector<double>(T, 0.0));
  std::vector<std::vector<int>> back(L, std::vector<int>(T, 0));
  for (int i = 1; i < L; ++i)
    for (int t2 = 0; t2 < T; ++t2) {
      double b = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int t = 0; t < T; ++t) {
        double v = best[i - 1][t] + scores[part_index(i, t, t2, T)];
        if (v > b) {
          b = v;
          arg = t;
        }
      }
      best[i][t2] = b;
      back[i][t2] = arg;
    }
  int last = 0;
  for (int t = 1; t < T; ++t)
    if (best[L - 1][t] > best[L - 1][last]) last = t;
  std::vector<int> tags(L);
  tags[L - 1] = last;
  for (int i = L - 1; i >= 1; --i) tags[i - 1] = back[i][tags[i]];
  return from_tags(tags);
}

double LinearChainDomain::structure_count() const {
  return std::pow(static_cast<double>(tags_), length_);
}

std::vector<Structure> LinearChainDomain::enumerate_unsorted() const {
  std::vector<Structure> all;
  std::vector<int> tags(length_, 0);
  while (true) {
    all.push_back(from_tags(tags));
    int i = length_ - 1;
    while (i >= 0 && ++tags[i] == tags_) tags[i--] = 0;
    if (i < 0) break;
  }
  return all;
}

std::pair<Vec, double> LinearChainDomain::marginals(const Vec& scores) const {
  check_scores(scores);
  Vec mu;
  double logz = 0.0;
  chain_fb<double>(length_, tags_, scores, [](double c) { return c; }, mu,
                   logz);
  return {mu, logz};
}

DiffVec LinearChainDomain::diff_marginals(const Vec& scores) const {
  check_scores(scores);
  auto tape = std::make_shared<Tape>();
  std::vector<TVar> leaves;
  std::vector<int> leaf_ids;
  leaves.reserve(scores.size());
  for (double x : scores) {
    int id = tape->leaf(x);
    leaf_ids.push_back(id);
    leaves.emplace_back(*tape, id);
  }
  std::vector<TVar> mu_vars;
  TVar logz;
  chain_fb<TVar>(
      length_, tags_, leaves,
      [&tape](double c) { return TVar(*tape, tape->leaf(c)); }, mu_vars, logz);

  Vec mu(mu_vars.size());
  std::vector<int> mu_ids(mu_vars.size());
  for (std::size_t i = 0; i < mu_vars.size(); ++i) {
    mu[i] = mu_vars[i].value();
    mu_ids[i] = mu_vars[i].i;
  }
  auto pullback = [tape, mu_ids, leaf_ids](const Vec& v) {
    if (v.size() != mu_ids.size())
      throw std::invalid_argument("chain marginal pullback: size mismatch");
    std::vector<std::pair<int, double>> seeds;
    seeds.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) seeds.push_back({mu_ids[i], v[i]});
    std::vector<double> adj = tape->gradient_multi(seeds);
    Vec out(leaf_ids.size());
    for (std::size_t i = 0; i < leaf_ids.size(); ++i) out[i] = adj[leaf_ids[i]];
    return out;
  };
  return DiffVec{mu, pullback, true};
}

Structure LinearChainDomain::sample_gibbs(const Vec& scores, Rng& rng) const {
  check_scores(scores);
  const int L = length_, T = tags_;
  std::vector<std::vector<double>> la(L, std::vector<double>(T, 0.0));
  for (int i = 1; i < L; ++i)
    for (int t2 = 0; t2 < T; ++t2) {
      double acc = la[i - 1][0] + scores[part_index(i, 0, t2, T)];
      for (int t = 1; t < T; ++t)
        acc = logaddexp(acc, la[i - 1][t] + scores[part_index(i, t, t2, T)]);
      la[i][t2] = acc;
    }
  auto draw = [&rng](const Vec& logw) {
    double m = *std::max_element(logw.begin(), logw.end());
    Vec w(logw.size(), 0.0);
    for (std::size_t j = 0; j < logw.size(); ++j)
      w[j] = is_neg_inf(logw[j]) ? 0.0 : std::exp(logw[j] - m);
    return rng.categorical(w);
  };
  std::vector<int> tags(L);
  tags[L - 1] = draw(la[L - 1]);
  for (int i = L - 1; i >= 1; --i) {
    Vec logw(T);
    for (int t = 0; t < T; ++t)
      logw[t] = la[i - 1][t] + scores[part_index(i, t, tags[i], T)];
    tags[i - 1] = draw(logw);
  }
  return from_tags(tags);
}

std::pair<Vec, double> forward_backward(const LinearChainDomain& chain,
                                        const Vec& scores) {
  return chain.marginals(scores);
}

Structure ffbs_sample(const LinearChainDomain& chain, const Vec& scores,
                      Rng& rng) {
  return chain.sample_gibbs(scores, rng);
}

}  // namespace latstruct
