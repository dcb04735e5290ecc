#pragma once

#include <cmath>

namespace nlostrack {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

inline bool is_finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace nlostrack
