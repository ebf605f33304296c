#include "latstruct/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latstruct {

Tensor::Tensor(std::vector<int> shape_, Vec data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  if (n != data.size())
    throw std::invalid_argument("Tensor: data length does not match shape");
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return Tensor(shape, Vec(n, 0.0));
}

Tensor Tensor::matrix(int rows, int cols, double fill) {
  return Tensor({rows, cols},
                Vec(static_cast<std::size_t>(rows) * cols, fill));
}

int Tensor::rows() const {
  if (shape.size() != 2) throw std::logic_error("Tensor::rows: not a matrix");
  return shape[0];
}

int Tensor::cols() const {
  if (shape.size() != 2) throw std::logic_error("Tensor::cols: not a matrix");
  return shape[1];
}

double& Tensor::at(int i, int j) {
  return data[static_cast<std::size_t>(i) * cols() + j];
}

double Tensor::at(int i, int j) const {
  return data[static_cast<std::size_t>(i) * cols() + j];
}

void Tensor::check_entries(const std::string& what) const {
  for (std::size_t i = 0; i < data.size(); ++i) {
    double x = data[i];
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
      throw std::invalid_argument(what + ": entry " + std::to_string(i) +
                                  " is not finite (only -inf masks allowed)");
  }
}

double logsumexp(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("logsumexp: empty vector");
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (is_neg_inf(m)) return m;  // empty support
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scale(const Vec& a, double c) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * c;
  return r;
}

double linf_norm(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

double l2_norm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace latstruct
