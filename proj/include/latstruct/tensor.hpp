#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace latstruct {

using Vec = std::vector<double>;

// Dense row-major tensor of doubles. The only permitted non-finite entry is
// -inf, used as a hard mask.
struct Tensor {
  std::vector<int> shape;
  Vec data;

  Tensor() = default;
  Tensor(std::vector<int> shape_, Vec data_);

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor matrix(int rows, int cols, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  int rows() const;
  int cols() const;

  double& at(int i, int j);
  double at(int i, int j) const;

  // Throws if any entry is NaN or +inf.
  void check_entries(const std::string& what) const;
};

// Stable log(sum(exp(v))). Entries may be -inf; returns -inf when all are.
double logsumexp(const Vec& v);

double dot(const Vec& a, const Vec& b);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(const Vec& a, double c);
double linf_norm(const Vec& a);
double l2_norm(const Vec& a);

inline bool is_neg_inf(double x) {
  return x == -std::numeric_limits<double>::infinity();
}

}  // namespace latstruct
