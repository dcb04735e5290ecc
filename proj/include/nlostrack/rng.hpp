#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

#include "nlostrack/geometry.hpp"

namespace nlostrack {

// All randomness in a run flows from one master seed through named
// sub-streams (scene, noise, init, imu), so toggling one noise source
// leaves the draws of every other source unchanged.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name) {
  return splitmix64(master ^ fnv1a64(stream_name));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

// Deterministic stream: mt19937_64 core with hand-rolled uniform and
// Box-Muller transforms, so the produced sequences are identical across
// standard libraries and platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  RngStream(std::uint64_t master, std::string_view stream_name)
      : eng_(derive_seed(master, stream_name)) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two uniforms per draw).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Circularly symmetric complex Gaussian with total variance `variance`.
  std::complex<double> cnormal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal(0.0, s);
    const double im = normal(0.0, s);
    return {re, im};
  }

  /// Uniform point in the disk of given radius (polar method, two uniforms).
  Point2 point_in_disk(const Point2& center, double radius) {
    const double r = radius * std::sqrt(uniform());
    const double a = uniform(0.0, 2.0 * kPi);
    return {center.x + r * std::cos(a), center.y + r * std::sin(a)};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace nlostrack
