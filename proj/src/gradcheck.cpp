#include "latstruct/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace latstruct {

Tensor finite_diff_jacobian(const VecFn& f, const Vec& x, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_jacobian: eps <= 0");
  Vec y0 = f(x);
  const int out_dim = static_cast<int>(y0.size());
  const int in_dim = static_cast<int>(x.size());
  Tensor jac = Tensor::matrix(out_dim, in_dim);
  for (int i = 0; i < in_dim; ++i) {
    Vec xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    Vec yp = f(xp), ym = f(xm);
    if (yp.size() != y0.size() || ym.size() != y0.size())
      throw std::runtime_error("finite_diff_jacobian: output size changed");
    for (int r = 0; r < out_dim; ++r) {
      double d = (yp[r] - ym[r]) / (2.0 * eps);
      if (!std::isfinite(d))
        throw std::runtime_error(
            "finite_diff_jacobian: non-finite output at coordinate " +
            std::to_string(r));
      jac.at(r, i) = d;
    }
  }
  return jac;
}

double jacobian_check(const std::function<DiffVec(const Vec&)>& layer,
                      const Vec& x, double eps) {
  DiffVec at_x = layer(x);
  const int out_dim = static_cast<int>(at_x.value.size());
  const int in_dim = static_cast<int>(x.size());

  Tensor fd = finite_diff_jacobian(
      [&](const Vec& p) { return layer(p).value; }, x, eps);

  double max_abs = 0.0, jnorm = 0.0;
  for (int r = 0; r < out_dim; ++r) {
    Vec seed(out_dim, 0.0);
    seed[r] = 1.0;
    Vec row = at_x.pullback(seed);
    if (static_cast<int>(row.size()) != in_dim)
      throw std::runtime_error("jacobian_check: pullback shape mismatch");
    double row_sum = 0.0;
    for (int c = 0; c < in_dim; ++c) {
      max_abs = std::max(max_abs, std::fabs(fd.at(r, c) - row[c]));
      row_sum += std::fabs(fd.at(r, c));
    }
    jnorm = std::max(jnorm, row_sum);
  }
  return max_abs / (1.0 + jnorm);
}

}  // namespace latstruct
