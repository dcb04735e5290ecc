#pragma once

#include <functional>
#include <vector>

namespace nlostrack::stats {

/// Regularized lower incomplete gamma P(a, x).
double regularized_lower_gamma(double a, double x);

/// Chi-square CDF with `dof` degrees of freedom.
double chi2_cdf(double x, double dof);

/// Chi-square quantile, found by bisection on the regularized incomplete
/// gamma function to an absolute tolerance of 1e-10.
double chi2_quantile(double p, double dof);

/// Nearest-rank quantile of an ascending-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Empirical CDF value F(v) = #{x_i <= v} / n for a sorted sample.
double empirical_cdf_at(const std::vector<double>& sorted, double v);

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

}  // namespace nlostrack::stats
