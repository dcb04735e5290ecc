#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "nlostrack/geometry.hpp"
#include "nlostrack/rng.hpp"

namespace nlostrack::scene {

enum class TrajectoryShape { s_curve, waypoints };

// The S-curve is two joined circular arcs (left turn then right turn)
// traversed at constant speed. The default radius speed*duration/(2*pi)
// makes each arc a semicircle, so the curve is an S of height 4r.
struct TrajectoryConfig {
  TrajectoryShape shape = TrajectoryShape::s_curve;
  double speed = 15.0;         // m/s (54 km/h)
  double duration = 60.0;      // s
  double dt = 0.1;             // s
  double area_width = 500.0;   // m
  double area_height = 600.0;  // m
  double arc_radius = 0.0;     // m; 0 selects speed*duration/(2*pi)
  std::vector<Point2> waypoints;

  void validate() const;  // throws std::invalid_argument
};

struct Kinematics {
  Point2 pos;
  double heading = 0.0;  // rad, atan2 of velocity
  Point2 vel;
  Point2 acc;
};

// Positions are sampled analytically at arc length speed*t; velocity and
// acceleration are central finite differences of position, so the reported
// kinematics are exactly what a differencing IMU would see.
std::vector<Kinematics> generate_trajectory(const TrajectoryConfig& cfg);

struct ScattererPolicy {
  double redraw_distance = 50.0;    // m of travel between re-draws
  double placement_radius = 150.0;  // m, disk around the UE
  int num_paths = 4;                // L

  void validate() const;
};

// Uniform draws in a disk around the UE. A draw is rejected when either
// leg has zero length, when the convention angles would leave (0, pi), or
// when the path is collinear with the BS-UE segment (|sin(phi - (theta +
// gamma))| < 1e-3), which would make its triangulation line degenerate.
// Throws after 1000 rejections for a single path.
std::vector<Point2> place_scatterers(const Point2& ue, double ue_gamma, const Point2& bs,
                                     const ScattererPolicy& policy, RngStream& rng);

struct GeometrySet {
  std::vector<double> aod;       // phi_l: global angle of ray BS -> S_l
  std::vector<double> aoa;       // theta_l: global angle of ray S_l -> UE minus gamma
  std::vector<double> path_len;  // R_l = |BS - S_l| + |S_l - UE|
};

GeometrySet compute_geometry(const Point2& bs, const Point2& ue, double gamma,
                             std::span<const Point2> scatterers);

struct SceneFrame {
  int t = 0;
  Point2 ue_pos;
  double gamma = 0.0;  // UE orientation
  Point2 vel;
  Point2 acc;
  std::vector<Point2> scatterers;
  std::vector<double> aod;
  std::vector<double> aoa;
  std::vector<double> path_len;
  int epoch_id = 0;  // increments at every scatterer re-draw
};

struct SceneConfig {
  TrajectoryConfig trajectory;
  ScattererPolicy scatterers;
  Point2 bs_pos{0.0, 0.0};
};

std::vector<SceneFrame> build_scene(const SceneConfig& cfg, RngStream& rng);

/// One CSV row per timestep: t,x,y,gamma,vx,vy,ax,ay,epoch_id then
/// phi_l,theta_l,R_l,sx_l,sy_l per path.
void write_scene_csv(std::ostream& os, std::span<const SceneFrame> frames);

}  // namespace nlostrack::scene
