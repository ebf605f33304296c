#pragma once

#include <functional>
#include <vector>

#include "latstruct/diff.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

using VecFn = std::function<Vec(const Vec&)>;

// Central-difference Jacobian estimate, column i = (f(x+eps e_i) -
// f(x-eps e_i)) / (2 eps). Throws naming the offending output coordinate if f
// produces a non-finite value.
Tensor finite_diff_jacobian(const VecFn& f, const Vec& x, double eps = 1e-6);

// Max |J_fd - J_pullback| / (1 + ||J_fd||_inf) between the finite-difference
// Jacobian of `f` and the Jacobian assembled from the layer's pullback
// (row i = pullback(e_i)).
double jacobian_check(const std::function<DiffVec(const Vec&)>& layer,
                      const Vec& x, double eps = 1e-6);

}  // namespace latstruct
