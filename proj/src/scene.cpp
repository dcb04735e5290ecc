#include "nlostrack/scene.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "nlostrack/csv.hpp"

namespace nlostrack::scene {

namespace {

constexpr double kAreaMargin = 10.0;  // m kept between the S-curve and the area edge
constexpr double kCollinearSinTol = 1e-3;

// Constant-curvature arc: position after arc length s from p0 with initial
// heading h0 and signed curvature k (left positive).
Point2 arc_position(const Point2& p0, double h0, double k, double s) {
  const double h = h0 + k * s;
  return {p0.x + (std::sin(h) - std::sin(h0)) / k, p0.y - (std::cos(h) - std::cos(h0)) / k};
}

class PathSampler {
 public:
  virtual ~PathSampler() = default;
  virtual Point2 position(double arc_len) const = 0;  // defined for any real arc_len
  virtual double heading(double arc_len) const = 0;
};

class StaticSampler final : public PathSampler {
 public:
  StaticSampler(Point2 p, double heading) : p_(p), heading_(heading) {}
  Point2 position(double) const override { return p_; }
  double heading(double) const override { return heading_; }

 private:
  Point2 p_;
  double heading_;
};

class SCurveSampler final : public PathSampler {
 public:
  SCurveSampler(Point2 start, double radius, double half_len)
      : start_(start), radius_(radius), half_len_(half_len) {
    mid_ = arc_position(start_, 0.0, 1.0 / radius_, half_len_);
    mid_heading_ = half_len_ / radius_;
  }

  Point2 position(double s) const override {
    if (s <= half_len_) return arc_position(start_, 0.0, 1.0 / radius_, s);
    return arc_position(mid_, mid_heading_, -1.0 / radius_, s - half_len_);
  }

  double heading(double s) const override {
    if (s <= half_len_) return wrap_pi(s / radius_);
    return wrap_pi(mid_heading_ - (s - half_len_) / radius_);
  }

 private:
  Point2 start_;
  double radius_;
  double half_len_;
  Point2 mid_;
  double mid_heading_ = 0.0;
};

class PolylineSampler final : public PathSampler {
 public:
  explicit PolylineSampler(const std::vector<Point2>& pts) : pts_(pts) {
    cum_.resize(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i)
      cum_[i] = cum_[i - 1] + distance(pts_[i - 1], pts_[i]);
  }

  double total_length() const { return cum_.back(); }

  Point2 position(double s) const override {
    const auto [i, dir, base, offset] = locate(s);
    (void)dir;
    return {pts_[i].x + base.x * offset, pts_[i].y + base.y * offset};
  }

  double heading(double s) const override {
    const auto [i, dir, base, offset] = locate(s);
    (void)i;
    (void)base;
    (void)offset;
    return dir;
  }

 private:
  struct Segment {
    std::size_t start_index;
    double direction;
    Point2 unit;
    double offset;
  };

  Segment locate(double s) const {
    // Extend the first/last segment linearly beyond the ends so finite
    // differences stay well defined at the boundary frames.
    std::size_t seg = 0;
    if (pts_.size() >= 2) {
      const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
      seg = static_cast<std::size_t>(std::clamp<long>(it - cum_.begin() - 1, 0L,
                                                      static_cast<long>(pts_.size()) - 2));
    }
    const Point2 d = pts_[seg + 1] - pts_[seg];
    const double len = d.norm();
    const Point2 unit = {d.x / len, d.y / len};
    return {seg, std::atan2(unit.y, unit.x), unit, s - cum_[seg]};
  }

  std::vector<Point2> pts_;
  std::vector<double> cum_;
};

void check_inside_area(const Point2& p, const TrajectoryConfig& cfg) {
  const double tol = 1e-9;
  if (p.x < -tol || p.x > cfg.area_width + tol || p.y < -tol || p.y > cfg.area_height + tol)
    throw std::invalid_argument("generated trajectory leaves the configured area");
}

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory: dt must be > 0");
  if (!(speed >= 0.0)) throw std::invalid_argument("trajectory: speed must be >= 0");
  if (!(duration >= 0.0)) throw std::invalid_argument("trajectory: duration must be >= 0");
  if (!(area_width > 0.0) || !(area_height > 0.0))
    throw std::invalid_argument("trajectory: area dimensions must be > 0");
  if (shape == TrajectoryShape::waypoints && waypoints.empty())
    throw std::invalid_argument("trajectory: waypoint list is empty in waypoints mode");
  for (const auto& w : waypoints)
    if (!is_finite(w)) throw std::invalid_argument("trajectory: non-finite waypoint");
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    if (distance(waypoints[i], waypoints[i - 1]) < 1e-12)
      throw std::invalid_argument("trajectory: consecutive duplicate waypoints");
}

std::vector<Kinematics> generate_trajectory(const TrajectoryConfig& cfg) {
  cfg.validate();

  const int n_frames = static_cast<int>(std::floor(cfg.duration / cfg.dt + 1e-9)) + 1;
  const double total_len = cfg.speed * cfg.duration;

  std::unique_ptr<PathSampler> sampler;
  if (cfg.shape == TrajectoryShape::s_curve) {
    if (total_len <= 0.0 || cfg.speed == 0.0) {
      sampler = std::make_unique<StaticSampler>(
          Point2{cfg.area_width / 2.0, cfg.area_height / 2.0}, 0.0);
    } else {
      const double r = cfg.arc_radius > 0.0 ? cfg.arc_radius : total_len / (2.0 * kPi);
      if (2.0 * r + 2.0 * kAreaMargin > cfg.area_width ||
          4.0 * r + 2.0 * kAreaMargin > cfg.area_height)
        throw std::invalid_argument("trajectory: s_curve radius does not fit the area");
      const Point2 start{cfg.area_width / 2.0, (cfg.area_height - 4.0 * r) / 2.0};
      sampler = std::make_unique<SCurveSampler>(start, r, total_len / 2.0);
    }
  } else {
    auto poly = std::make_unique<PolylineSampler>(cfg.waypoints);
    if (cfg.waypoints.size() < 2 || poly->total_length() <= 0.0 || cfg.speed == 0.0)
      sampler = std::make_unique<StaticSampler>(cfg.waypoints.front(), 0.0);
    else
      sampler = std::move(poly);
  }

  std::vector<Kinematics> out;
  out.reserve(static_cast<std::size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    const double s = cfg.speed * (static_cast<double>(t) * cfg.dt);
    const double sp = cfg.speed * (static_cast<double>(t) * cfg.dt + cfg.dt);
    const double sm = cfg.speed * (static_cast<double>(t) * cfg.dt - cfg.dt);

    Kinematics k;
    k.pos = sampler->position(s);
    const Point2 next = sampler->position(sp);
    const Point2 prev = sampler->position(sm);
    k.vel = (next - prev) * (1.0 / (2.0 * cfg.dt));
    k.acc = (next - k.pos - k.pos + prev) * (1.0 / (cfg.dt * cfg.dt));
    k.heading = k.vel.norm() > 1e-12 ? std::atan2(k.vel.y, k.vel.x) : sampler->heading(s);
    check_inside_area(k.pos, cfg);
    out.push_back(k);
  }
  return out;
}

void ScattererPolicy::validate() const {
  if (!(redraw_distance > 0.0)) throw std::invalid_argument("scatterers: redraw_distance must be > 0");
  if (!(placement_radius > 0.0))
    throw std::invalid_argument("scatterers: placement_radius must be > 0");
  if (num_paths < 1) throw std::invalid_argument("scatterers: num_paths must be >= 1");
}

std::vector<Point2> place_scatterers(const Point2& ue, double ue_gamma, const Point2& bs,
                                     const ScattererPolicy& policy, RngStream& rng) {
  policy.validate();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(policy.num_paths));
  for (int l = 0; l < policy.num_paths; ++l) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Point2 s = rng.point_in_disk(ue, policy.placement_radius);
      if (distance(s, bs) < 1e-9 || distance(s, ue) < 1e-9) continue;
      const double phi = std::atan2(s.y - bs.y, s.x - bs.x);
      if (!(phi > 0.0 && phi < kPi)) continue;
      const double ray = std::atan2(ue.y - s.y, ue.x - s.x);
      const double theta = wrap_pi(ray - ue_gamma);
      if (!(theta > 0.0 && theta < kPi)) continue;
      if (std::abs(std::sin(phi - ray)) < kCollinearSinTol) continue;
      out.push_back(s);
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error("place_scatterers: no valid placement after 1000 retries");
  }
  return out;
}

GeometrySet compute_geometry(const Point2& bs, const Point2& ue, double gamma,
                             std::span<const Point2> scatterers) {
  GeometrySet g;
  g.aod.reserve(scatterers.size());
  g.aoa.reserve(scatterers.size());
  g.path_len.reserve(scatterers.size());
  for (const Point2& s : scatterers) {
    const double r1 = distance(bs, s);
    const double r2 = distance(s, ue);
    if (r1 < 1e-12 || r2 < 1e-12)
      throw std::invalid_argument("compute_geometry: zero-length path leg");
    g.aod.push_back(std::atan2(s.y - bs.y, s.x - bs.x));
    g.aoa.push_back(wrap_pi(std::atan2(ue.y - s.y, ue.x - s.x) - gamma));
    g.path_len.push_back(r1 + r2);
  }
  return g;
}

std::vector<SceneFrame> build_scene(const SceneConfig& cfg, RngStream& rng) {
  const auto traj = generate_trajectory(cfg.trajectory);
  cfg.scatterers.validate();

  std::vector<SceneFrame> frames;
  frames.reserve(traj.size());

  double cum_dist = 0.0;
  double next_redraw = cfg.scatterers.redraw_distance;
  int epoch = 0;
  std::vector<Point2> scatterers =
      place_scatterers(traj[0].pos, traj[0].heading, cfg.bs_pos, cfg.scatterers, rng);

  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (t > 0) cum_dist += distance(traj[t].pos, traj[t - 1].pos);
    while (cum_dist >= next_redraw - 1e-12) {
      ++epoch;
      next_redraw += cfg.scatterers.redraw_distance;
      scatterers =
          place_scatterers(traj[t].pos, traj[t].heading, cfg.bs_pos, cfg.scatterers, rng);
    }

    SceneFrame f;
    f.t = static_cast<int>(t);
    f.ue_pos = traj[t].pos;
    f.gamma = traj[t].heading;
    f.vel = traj[t].vel;
    f.acc = traj[t].acc;
    f.scatterers = scatterers;
    auto geo = compute_geometry(cfg.bs_pos, f.ue_pos, f.gamma, scatterers);
    f.aod = std::move(geo.aod);
    f.aoa = std::move(geo.aoa);
    f.path_len = std::move(geo.path_len);
    f.epoch_id = epoch;
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_scene_csv(std::ostream& os, std::span<const SceneFrame> frames) {
  if (frames.empty()) return;
  const std::size_t L = frames.front().scatterers.size();
  os << "t,x,y,gamma,vx,vy,ax,ay,epoch_id";
  for (std::size_t l = 1; l <= L; ++l)
    os << ",phi" << l << ",theta" << l << ",R" << l << ",sx" << l << ",sy" << l;
  os << "\n";
  for (const auto& f : frames) {
    os << f.t << ',' << io::format_double(f.ue_pos.x) << ',' << io::format_double(f.ue_pos.y)
       << ',' << io::format_double(f.gamma) << ',' << io::format_double(f.vel.x) << ','
       << io::format_double(f.vel.y) << ',' << io::format_double(f.acc.x) << ','
       << io::format_double(f.acc.y) << ',' << f.epoch_id;
    for (std::size_t l = 0; l < L; ++l) {
      os << ',' << io::format_double(f.aod[l]) << ',' << io::format_double(f.aoa[l]) << ','
         << io::format_double(f.path_len[l]) << ',' << io::format_double(f.scatterers[l].x)
         << ',' << io::format_double(f.scatterers[l].y);
    }
    os << "\n";
  }
}

}  // namespace nlostrack::scene
