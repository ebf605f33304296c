#pragma once

#include <vector>

#include "latstruct/tensor.hpp"

namespace latstruct {

// Upper regularized incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// P(X >= stat) for X ~ chi-square with df degrees of freedom.
double chi_square_pvalue(double stat, int df);

// Goodness-of-fit p-value of observed counts against expected probabilities
// (cells with zero expectation must have zero counts).
double chi_square_gof(const std::vector<long>& counts, const Vec& expected);

// Spearman rank correlation; ties get average ranks.
double spearman_rho(const Vec& x, const Vec& y);

double mean(const Vec& v);
double sample_variance(const Vec& v);

}  // namespace latstruct
