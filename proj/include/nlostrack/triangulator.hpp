#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nlostrack/geometry.hpp"

namespace nlostrack::triangulation {

// Coefficients of a_l x + b_l y + c_l = 0. Each single-bounce path confines
// the UE to such a line given (aod, aoa, pathlength, orientation).
struct PathLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double weight = 1.0;
};

/// Returns nullopt when the two legs are parallel
/// (|sin(aod - (aoa + gamma))| < 1e-9), which carries no line information.
std::optional<PathLine> build_line(double aod, double aoa, double gamma, double range,
                                   const Point2& bs, double weight = 1.0);

double point_line_distance(const Point2& p, const PathLine& line);

enum class SolveStatus { converged, max_iter, degenerate };

struct PoseEstimate {
  double x = 0.0;
  double y = 0.0;
  double gamma = 0.0;
  double cost = 0.0;
  SolveStatus status = SolveStatus::degenerate;
};

struct PathMeasurement {
  double aod = 0.0;
  double aoa = 0.0;
  double range = 0.0;
  double weight = 1.0;
};

struct SolveOptions {
  std::optional<double> gamma_init;   // centre of the bracket search
  std::optional<double> fixed_gamma;  // skip the orientation search entirely
  double gamma_bracket = deg2rad(10.0);
  int max_iter = 200;
  double tol = 1e-13;       // golden-section bracket width
  int coarse_samples = 720;  // grid resolution when gamma_init is absent
};

// Minimizes sum_l beta_l d_l^2 over (x, y, gamma). For fixed gamma the
// lines are normalized to a^2 + b^2 = 1 and the (x, y) minimizer is the
// closed-form weighted least-squares solution; gamma is profiled out with a
// bracketed golden-section search plus a Newton polish (coarse grid over
// (-pi, pi] when no initial value is supplied). Needs >= 3 non-degenerate
// paths, or >= 2 with fixed_gamma.
PoseEstimate solve_pose(std::span<const PathMeasurement> paths, const Point2& bs,
                        const SolveOptions& opts = {});

enum class WeightPolicy { uniform, innovation_inverse };

/// uniform: all ones. innovation_inverse: beta_l proportional to
/// 1 / per_path_variance[l], normalized to sum to L.
std::vector<double> path_weights(WeightPolicy policy, std::span<const double> per_path_variance);

}  // namespace nlostrack::triangulation
