#include "nlostrack/triangulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nlostrack::triangulation {

namespace {

constexpr double kDegenerateSinTol = 1e-9;
constexpr double kConditionLimit = 1e8;

struct XySolution {
  double x = 0.0;
  double y = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  int used_paths = 0;
  bool well_conditioned = false;
};

// Closed-form weighted least squares over the normalized lines at a fixed
// orientation. Lines whose legs are parallel at this gamma are skipped.
XySolution solve_xy(std::span<const PathMeasurement> paths, const Point2& bs, double gamma) {
  double m00 = 0.0, m01 = 0.0, m11 = 0.0;
  double r0 = 0.0, r1 = 0.0;

  struct NormLine {
    double a, b, c, w;
  };
  std::vector<NormLine> lines;
  lines.reserve(paths.size());

  for (const auto& p : paths) {
    const auto line = build_line(p.aod, p.aoa, gamma, p.range, bs, p.weight);
    if (!line) continue;
    const double s = std::sqrt(line->a * line->a + line->b * line->b);
    const NormLine nl{line->a / s, line->b / s, line->c / s, p.weight};
    lines.push_back(nl);
    m00 += nl.w * nl.a * nl.a;
    m01 += nl.w * nl.a * nl.b;
    m11 += nl.w * nl.b * nl.b;
    r0 -= nl.w * nl.c * nl.a;
    r1 -= nl.w * nl.c * nl.b;
  }

  XySolution sol;
  sol.used_paths = static_cast<int>(lines.size());
  if (sol.used_paths < 2) return sol;

  // 2x2 symmetric eigenvalues for the condition check.
  const double tr = m00 + m11;
  const double det = m00 * m11 - m01 * m01;
  const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
  const double lam_max = tr / 2.0 + disc;
  const double lam_min = tr / 2.0 - disc;
  if (!(lam_min > 0.0) || lam_max / lam_min > kConditionLimit) return sol;

  sol.well_conditioned = true;
  sol.x = (m11 * r0 - m01 * r1) / det;
  sol.y = (m00 * r1 - m01 * r0) / det;
  sol.cost = 0.0;
  for (const auto& nl : lines) {
    const double resid = nl.a * sol.x + nl.b * sol.y + nl.c;
    sol.cost += nl.w * resid * resid;
  }
  return sol;
}

double profile_cost(std::span<const PathMeasurement> paths, const Point2& bs, double gamma) {
  const auto sol = solve_xy(paths, bs, gamma);
  return sol.well_conditioned ? sol.cost : std::numeric_limits<double>::infinity();
}

struct GoldenResult {
  double gamma = 0.0;
  bool converged = false;
};

GoldenResult golden_section(std::span<const PathMeasurement> paths, const Point2& bs, double lo,
                            double hi, int max_iter, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = profile_cost(paths, bs, x1);
  double f2 = profile_cost(paths, bs, x2);
  int it = 0;
  for (; it < max_iter && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = profile_cost(paths, bs, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = profile_cost(paths, bs, x2);
    }
  }
  return {0.5 * (a + b), (b - a) <= tol};
}

// A couple of guarded Newton steps on the profiled cost tighten the
// golden-section result to near machine precision.
double newton_polish(std::span<const PathMeasurement> paths, const Point2& bs, double gamma) {
  const double h = 1e-7;
  for (int i = 0; i < 3; ++i) {
    const double f0 = profile_cost(paths, bs, gamma);
    const double fp = profile_cost(paths, bs, gamma + h);
    const double fm = profile_cost(paths, bs, gamma - h);
    if (!std::isfinite(f0) || !std::isfinite(fp) || !std::isfinite(fm)) break;
    const double g = (fp - fm) / (2.0 * h);
    const double gg = (fp - 2.0 * f0 + fm) / (h * h);
    if (!(gg > 0.0)) break;
    const double step = -g / gg;
    if (!std::isfinite(step) || std::abs(step) > 0.05) break;
    const double cand = gamma + step;
    if (profile_cost(paths, bs, cand) <= f0) gamma = cand;
    if (std::abs(step) < 1e-14) break;
  }
  return gamma;
}

}  // namespace

std::optional<PathLine> build_line(double aod, double aoa, double gamma, double range,
                                   const Point2& bs, double weight) {
  const double tg = aoa + gamma;
  if (std::abs(std::sin(aod - tg)) < kDegenerateSinTol) return std::nullopt;
  PathLine line;
  line.a = std::sin(aod) - std::sin(tg);
  line.b = std::cos(tg) - std::cos(aod);
  line.c = -line.a * (range * std::cos(tg) + bs.x) - line.b * (range * std::sin(tg) + bs.y);
  line.weight = weight;
  return line;
}

double point_line_distance(const Point2& p, const PathLine& line) {
  const double n = std::sqrt(line.a * line.a + line.b * line.b);
  if (n * n <= 1e-12) throw std::invalid_argument("point_line_distance: degenerate line");
  return std::abs(line.a * p.x + line.b * p.y + line.c) / n;
}

PoseEstimate solve_pose(std::span<const PathMeasurement> paths, const Point2& bs,
                        const SolveOptions& opts) {
  PoseEstimate est;

  if (opts.fixed_gamma) {
    const auto sol = solve_xy(paths, bs, *opts.fixed_gamma);
    est.gamma = *opts.fixed_gamma;
    if (!sol.well_conditioned) return est;
    est.x = sol.x;
    est.y = sol.y;
    est.cost = sol.cost;
    est.status = SolveStatus::converged;
    return est;
  }

  if (paths.size() < 3) return est;  // three unknowns, one constraint per line

  double best_gamma = 0.0;
  bool converged = true;

  if (opts.gamma_init) {
    const double lo = *opts.gamma_init - opts.gamma_bracket;
    const double hi = *opts.gamma_init + opts.gamma_bracket;
    const int samples = 33;
    double best = std::numeric_limits<double>::infinity();
    double best_g = *opts.gamma_init;
    for (int i = 0; i <= samples; ++i) {
      const double g = lo + (hi - lo) * static_cast<double>(i) / samples;
      const double f = profile_cost(paths, bs, g);
      if (f < best) {
        best = f;
        best_g = g;
      }
    }
    const double step = (hi - lo) / samples;
    const auto gr =
        golden_section(paths, bs, best_g - step, best_g + step, opts.max_iter, opts.tol);
    best_gamma = newton_polish(paths, bs, gr.gamma);
    converged = gr.converged;
  } else {
    // Coarse scan of the full circle, then refine the best few basins.
    const int n = std::max(opts.coarse_samples, 8);
    std::vector<double> costs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      costs[static_cast<std::size_t>(i)] =
          profile_cost(paths, bs, -kPi + 2.0 * kPi * static_cast<double>(i) / n);

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::partial_sort(order.begin(), order.begin() + 3, order.end(), [&](int a, int b) {
      return costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(b)];
    });

    const double step = 2.0 * kPi / n;
    double best_cost = std::numeric_limits<double>::infinity();
    converged = false;
    for (int k = 0; k < 3; ++k) {
      const double g0 = -kPi + step * order[static_cast<std::size_t>(k)];
      const auto gr = golden_section(paths, bs, g0 - step, g0 + step, opts.max_iter, opts.tol);
      const double g = newton_polish(paths, bs, gr.gamma);
      const double f = profile_cost(paths, bs, g);
      if (f < best_cost) {
        best_cost = f;
        best_gamma = g;
        converged = gr.converged;
      }
    }
  }

  const auto sol = solve_xy(paths, bs, best_gamma);
  est.gamma = wrap_pi(best_gamma);
  if (!sol.well_conditioned) {
    est.status = SolveStatus::degenerate;
    return est;
  }
  est.x = sol.x;
  est.y = sol.y;
  est.cost = sol.cost;
  est.status = converged ? SolveStatus::converged : SolveStatus::max_iter;
  return est;
}

std::vector<double> path_weights(WeightPolicy policy, std::span<const double> per_path_variance) {
  const std::size_t L = per_path_variance.size();
  std::vector<double> beta(L, 1.0);
  if (policy == WeightPolicy::uniform || L == 0) return beta;
  double sum = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    beta[l] = 1.0 / std::max(per_path_variance[l], 1e-15);
    sum += beta[l];
  }
  for (auto& b : beta) b *= static_cast<double>(L) / sum;
  return beta;
}

}  // namespace nlostrack::triangulation
