#include "latstruct/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace latstruct {

AssignmentDomain::AssignmentDomain(int m) : m_(m) {
  if (m < 1) throw std::invalid_argument("AssignmentDomain: m < 1");
}

Structure AssignmentDomain::from_permutation(
    const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != m_)
    throw std::invalid_argument("from_permutation: wrong length");
  Structure z;
  z.bits.assign(m_ * m_, 0);
  for (int i = 0; i < m_; ++i) z.bits[i * m_ + perm[i]] = 1;
  return z;
}

std::vector<int> AssignmentDomain::to_permutation(const Structure& z) const {
  if (!is_valid(z))
    throw std::invalid_argument("to_permutation: invalid structure");
  std::vector<int> perm(m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      if (z.bits[i * m_ + j]) perm[i] = j;
  return perm;
}

bool AssignmentDomain::is_valid(const Structure& z) const {
  if (static_cast<int>(z.bits.size()) != m_ * m_) return false;
  for (int i = 0; i < m_; ++i) {
    int row = 0, col = 0;
    for (int j = 0; j < m_; ++j) {
      row += z.bits[i * m_ + j] ? 1 : 0;
      col += z.bits[j * m_ + i] ? 1 : 0;
    }
    if (row != 1 || col != 1) return false;
  }
  return true;
}

Structure AssignmentDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  Tensor S({m_, m_}, scores);
  auto [perm, value] = kuhn_munkres(S);
  (void)value;
  return from_permutation(perm);
}

double AssignmentDomain::structure_count() const {
  double f = 1.0;
  for (int i = 2; i <= m_; ++i) f *= i;
  return f;
}

std::vector<Structure> AssignmentDomain::enumerate_unsorted() const {
  std::vector<Structure> all;
  std::vector<int> perm(m_);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    all.push_back(from_permutation(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return all;
}

std::pair<std::vector<int>, double> kuhn_munkres(const Tensor& scores) {
  const int m = scores.rows();
  if (scores.cols() != m)
    throw std::invalid_argument("kuhn_munkres: matrix not square");
  scores.check_entries("kuhn_munkres");
  for (double x : scores.data)
    if (is_neg_inf(x))
      throw std::invalid_argument("kuhn_munkres: scores must be finite");

  // Min-cost formulation with row/column potentials; cost = -score.
  const double inf = std::numeric_limits<double>::infinity();
  auto cost = [&](int i, int j) { return -scores.at(i, j); };

  // 1-based arrays; p[j] = row matched to column j, p[0] = current row.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> perm(m);
  for (int j = 1; j <= m; ++j)
    if (p[j] > 0) perm[p[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += scores.at(i, perm[i]);
  return {perm, total};
}

}  // namespace latstruct
