#include "nlostrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlostrack::stats {

namespace {

constexpr int kMaxIter = 4000;
constexpr double kEps = 1e-16;

// Series expansion for P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz) for Q(a, x), valid for x >= a + 1.
double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_lower_gamma(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("regularized_lower_gamma: a > 0, x >= 0 required");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double chi2_cdf(double x, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("chi2_cdf: dof > 0 required");
  if (x <= 0.0) return 0.0;
  return regularized_lower_gamma(dof / 2.0, x / 2.0);
}

double chi2_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi2_quantile: p in (0, 1) required");
  double lo = 0.0;
  double hi = dof + 40.0 * std::sqrt(2.0 * dof) + 100.0;
  while (chi2_cdf(hi, dof) < p) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
  const auto n = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(p * static_cast<double>(n))) - 1;
  idx = std::clamp(idx, 0L, n - 1);
  return sorted[static_cast<std::size_t>(idx)];
}

double empirical_cdf_at(const std::vector<double>& sorted, double v) {
  if (sorted.empty()) throw std::invalid_argument("empirical_cdf_at: empty sample");
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

}  // namespace nlostrack::stats
