#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nlostrack/scene.hpp"

using namespace nlostrack;
using namespace nlostrack::scene;

namespace {

TrajectoryConfig straight_line_cfg() {
  TrajectoryConfig cfg;
  cfg.shape = TrajectoryShape::waypoints;
  cfg.waypoints = {{0.0, 0.0}, {100.0, 0.0}};
  cfg.speed = 10.0;
  cfg.dt = 1.0;
  cfg.duration = 10.0;
  return cfg;
}

}  // namespace

TEST_CASE("straight-line waypoints give the constant-velocity sequence") {
  const auto traj = generate_trajectory(straight_line_cfg());
  REQUIRE(traj.size() == 11);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    CHECK(traj[t].pos.x == doctest::Approx(10.0 * static_cast<double>(t)).epsilon(1e-12));
    CHECK(traj[t].pos.y == doctest::Approx(0.0));
    CHECK(traj[t].heading == doctest::Approx(0.0));
    CHECK(traj[t].vel.x == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(traj[t].vel.y == doctest::Approx(0.0));
    CHECK(traj[t].acc.norm() == doctest::Approx(0.0).epsilon(1e-9));
  }
  // Consecutive positions advance by speed*dt exactly on a line.
  for (std::size_t t = 1; t < traj.size(); ++t)
    CHECK(distance(traj[t].pos, traj[t - 1].pos) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("zero speed freezes the trajectory") {
  TrajectoryConfig cfg;
  cfg.speed = 0.0;
  cfg.duration = 5.0;
  cfg.dt = 0.5;
  const auto traj = generate_trajectory(cfg);
  REQUIRE(traj.size() == 11);
  for (const auto& k : traj) {
    CHECK(k.pos.x == traj[0].pos.x);
    CHECK(k.pos.y == traj[0].pos.y);
    CHECK(k.vel.norm() == 0.0);
    CHECK(k.acc.norm() == 0.0);
  }
}

TEST_CASE("s_curve arc length matches the chord-sum oracle") {
  TrajectoryConfig cfg;  // defaults: speed 15, duration 60, dt 0.1
  const auto traj = generate_trajectory(cfg);
  double chord_sum = 0.0;
  for (std::size_t t = 1; t < traj.size(); ++t)
    chord_sum += distance(traj[t].pos, traj[t - 1].pos);
  CHECK(chord_sum == doctest::Approx(900.0).epsilon(0.01));
}

TEST_CASE("reported velocity and acceleration equal central differences") {
  TrajectoryConfig cfg;
  const auto traj = generate_trajectory(cfg);
  for (std::size_t t = 1; t + 1 < traj.size(); t += 37) {
    const Point2 v = (traj[t + 1].pos - traj[t - 1].pos) * (1.0 / (2.0 * cfg.dt));
    const Point2 a =
        (traj[t + 1].pos - traj[t].pos - traj[t].pos + traj[t - 1].pos) * (1.0 / (cfg.dt * cfg.dt));
    CHECK(std::abs(traj[t].vel.x - v.x) < 1e-6);
    CHECK(std::abs(traj[t].vel.y - v.y) < 1e-6);
    CHECK(std::abs(traj[t].acc.x - a.x) < 1e-6);
    CHECK(std::abs(traj[t].acc.y - a.y) < 1e-6);
    CHECK(traj[t].heading == doctest::Approx(std::atan2(traj[t].vel.y, traj[t].vel.x)));
  }
}

TEST_CASE("s_curve stays inside the area and total travel matches speed*duration") {
  TrajectoryConfig cfg;
  const auto traj = generate_trajectory(cfg);
  double total = 0.0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    CHECK(traj[t].pos.x >= 0.0);
    CHECK(traj[t].pos.x <= cfg.area_width);
    CHECK(traj[t].pos.y >= 0.0);
    CHECK(traj[t].pos.y <= cfg.area_height);
    if (t > 0) total += distance(traj[t].pos, traj[t - 1].pos);
  }
  CHECK(std::abs(total - cfg.speed * cfg.duration) / (cfg.speed * cfg.duration) < 0.005);
}

TEST_CASE("trajectory validation rejects bad configs") {
  TrajectoryConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(generate_trajectory(cfg), std::invalid_argument);
  cfg = TrajectoryConfig{};
  cfg.shape = TrajectoryShape::waypoints;
  CHECK_THROWS_AS(generate_trajectory(cfg), std::invalid_argument);
  cfg = TrajectoryConfig{};
  cfg.arc_radius = 400.0;  // 4r exceeds the area height
  CHECK_THROWS_AS(generate_trajectory(cfg), std::invalid_argument);
}

TEST_CASE("scatterer placement respects containment, determinism, and L") {
  ScattererPolicy policy;
  policy.num_paths = 4;
  policy.placement_radius = 30.0;
  const Point2 ue{200.0, 300.0};
  const Point2 bs{0.0, 0.0};

  RngStream rng_a(11, "scene");
  RngStream rng_b(11, "scene");
  const auto a = place_scatterers(ue, 0.3, bs, policy, rng_a);
  const auto b = place_scatterers(ue, 0.3, bs, policy, rng_b);
  REQUIRE(a.size() == 4);
  for (std::size_t l = 0; l < a.size(); ++l) {
    CHECK(distance(a[l], ue) <= 30.0);
    CHECK(a[l].x == b[l].x);
    CHECK(a[l].y == b[l].y);
  }

  policy.num_paths = 1;
  RngStream rng_c(11, "scene");
  CHECK(place_scatterers(ue, 0.3, bs, policy, rng_c).size() == 1);
}

TEST_CASE("placement fails after 1000 retries in degenerate geometry") {
  // UE sitting on the BS makes every draw collinear.
  ScattererPolicy policy;
  RngStream rng(1, "scene");
  CHECK_THROWS_AS(place_scatterers({0.0, 0.0}, 0.0, {0.0, 0.0}, policy, rng),
                  std::runtime_error);
}

TEST_CASE("geometry of the axis-aligned right angle") {
  const Point2 bs{0.0, 0.0};
  const Point2 s{10.0, 0.0};
  const Point2 ue{10.0, -10.0};
  const auto g = compute_geometry(bs, ue, -kPi / 2.0, std::vector<Point2>{s});
  CHECK(g.aod[0] == doctest::Approx(0.0));
  CHECK(g.aoa[0] == doctest::Approx(0.0));
  CHECK(g.path_len[0] == doctest::Approx(20.0));
}

TEST_CASE("geometry with zero orientation returns the global ray angle") {
  const Point2 bs{0.0, 0.0};
  const Point2 s{10.0, 10.0};
  const Point2 ue{20.0, 20.0};  // on the BS->S ray extended
  const auto g = compute_geometry(bs, ue, 0.0, std::vector<Point2>{s});
  CHECK(g.aoa[0] == doctest::Approx(kPi / 4.0));
  CHECK(g.aod[0] == doctest::Approx(kPi / 4.0));
}

TEST_CASE("geometry rejects zero-length legs") {
  const Point2 bs{0.0, 0.0};
  CHECK_THROWS_AS(compute_geometry(bs, {5.0, 5.0}, 0.0, std::vector<Point2>{{0.0, 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(compute_geometry(bs, {5.0, 5.0}, 0.0, std::vector<Point2>{{5.0, 5.0}}),
                  std::invalid_argument);
}

TEST_CASE("forward geometry round trip reproduces the UE position") {
  SceneConfig cfg;
  cfg.trajectory.duration = 20.0;
  cfg.scatterers.placement_radius = 120.0;
  RngStream rng(77, "scene");
  const auto frames = build_scene(cfg, rng);
  for (std::size_t t = 0; t < frames.size(); t += 13) {
    const auto& f = frames[t];
    for (std::size_t l = 0; l < f.scatterers.size(); ++l) {
      const double r = distance(cfg.bs_pos, f.scatterers[l]);
      const double tg = f.aoa[l] + f.gamma;
      const Point2 s{cfg.bs_pos.x + r * std::cos(f.aod[l]),
                     cfg.bs_pos.y + r * std::sin(f.aod[l])};
      const Point2 ue{s.x + (f.path_len[l] - r) * std::cos(tg),
                      s.y + (f.path_len[l] - r) * std::sin(tg)};
      CHECK(distance(ue, f.ue_pos) < 1e-9);
      // The departure ray is fixed within an epoch, so aod stays in (0, pi).
      CHECK(f.aod[l] > 0.0);
      CHECK(f.aod[l] < kPi);
    }
  }

  // The arrival angle lands in (0, pi) wherever scatterers were just drawn;
  // mid-epoch it may cross zero as the vehicle turns.
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (t > 0 && frames[t].epoch_id == frames[t - 1].epoch_id) continue;
    for (double aoa : frames[t].aoa) {
      CHECK(aoa > 0.0);
      CHECK(aoa < kPi);
    }
  }
}

TEST_CASE("epochs increment exactly at redraw-distance crossings") {
  SceneConfig cfg;
  cfg.trajectory.duration = 40.0;
  cfg.scatterers.redraw_distance = 50.0;
  RngStream rng(5, "scene");
  const auto frames = build_scene(cfg, rng);

  double cum = 0.0;
  int prev_epoch = frames[0].epoch_id;
  CHECK(frames[0].epoch_id == 0);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    cum += distance(frames[t].ue_pos, frames[t - 1].ue_pos);
    const int expected = static_cast<int>(std::floor((cum + 1e-12) / 50.0));
    CHECK(frames[t].epoch_id == expected);
    CHECK(frames[t].epoch_id >= prev_epoch);
    if (frames[t].epoch_id != prev_epoch) {
      // Scatterer set changes exactly at the crossing.
      CHECK(frames[t].scatterers[0].x != frames[t - 1].scatterers[0].x);
    } else {
      CHECK(frames[t].scatterers[0].x == frames[t - 1].scatterers[0].x);
    }
    prev_epoch = frames[t].epoch_id;
  }
  CHECK(frames.back().epoch_id >= 11);  // ~600 m of travel at 50 m per epoch
}

TEST_CASE("scene csv has the documented layout and is deterministic") {
  SceneConfig cfg;
  cfg.trajectory.duration = 2.0;
  auto render = [&]() {
    RngStream rng(3, "scene");
    const auto frames = build_scene(cfg, rng);
    std::ostringstream os;
    write_scene_csv(os, frames);
    return os.str();
  };
  const std::string a = render();
  CHECK(a == render());
  CHECK(a.rfind("t,x,y,gamma,vx,vy,ax,ay,epoch_id,phi1,theta1,R1,sx1,sy1,", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 22);  // header + 21 frames
}
