#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nlostrack/cli.hpp"
#include "nlostrack/config.hpp"
#include "nlostrack/csv.hpp"
#include "nlostrack/report.hpp"
#include "nlostrack/rng.hpp"
#include "nlostrack/stats.hpp"
#include "nlostrack/trace.hpp"

using namespace nlostrack;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("nlostrack_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = io::run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("config round trip is a fixed point and echoes derived values") {
  const pipeline::RunConfig defaults;
  const auto first = io::serialize_config(defaults).dump(2);
  const auto reparsed = io::parse_config_text(first);
  const auto second = io::serialize_config(reparsed).dump(2);
  CHECK(first == second);

  const auto doc = nlohmann::json::parse(first);
  CHECK(doc.at("derived").at("noise_var").get<double>() == doctest::Approx(5.12));
  CHECK(doc.at("derived").at("change_dof").get<int>() == 1024);
  CHECK(doc.at("derived").at("wavelength_m").get<double>() ==
        doctest::Approx(299792458.0 / 40e9));
  CHECK(doc.at("process").at("a1").get<double>() == 0.95);
  CHECK(doc.at("scene").at("trajectory").at("speed_mps").get<double>() == 15.0);
}

TEST_CASE("unknown config keys are rejected with the offending path") {
  CHECK_THROWS_WITH_AS(io::parse_config_text("{\"snr_dbx\": 3}"),
                       doctest::Contains("snr_dbx"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::parse_config_text("{\"arrays\": {\"n_antennas\": 4}}"),
                       doctest::Contains("arrays.n_antennas"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_config_text("{\"n_steps\": "), std::invalid_argument);
}

TEST_CASE("compute_cdf worked examples") {
  const auto cdf = io::compute_cdf({1.0, 2.0, 3.0});
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[1].first == 2.0);
  CHECK(cdf[1].second == doctest::Approx(2.0 / 3.0));
  CHECK(cdf.back().second == 1.0);

  const auto flat = io::compute_cdf({4.0, 4.0, 4.0});
  REQUIRE(flat.size() == 1);
  CHECK(flat[0].first == 4.0);
  CHECK(flat[0].second == 1.0);

  CHECK_THROWS_AS(io::compute_cdf({}), std::invalid_argument);
}

TEST_CASE("compute_cdf against the folded-normal oracle") {
  RngStream rng(5);
  std::vector<double> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(std::abs(rng.normal()));
  const auto cdf = io::compute_cdf(draws);
  double at_one = 0.0;
  for (const auto& [v, p] : cdf) {
    if (v > 1.0) break;
    at_one = p;
  }
  CHECK(at_one == doctest::Approx(0.6827).epsilon(0.03));
}

TEST_CASE("format_double round-trips exactly") {
  RngStream rng(6);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0));
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(std::isnan(io::parse_double("nan")));
}

TEST_CASE("step-record csv round-trips through the reader") {
  pipeline::RunConfig cfg;
  cfg.scene.scatterers.placement_radius = 150.0;
  cfg.n_steps = 20;
  const auto rr = pipeline::run(cfg);
  std::ostringstream os;
  io::write_step_records_csv(os, rr.records, rr.num_paths);

  std::istringstream is(os.str());
  const auto back = io::read_step_records_csv(is);
  REQUIRE(back.size() == rr.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].t == rr.records[i].t);
    CHECK(back[i].pos_error == rr.records[i].pos_error);
    CHECK(back[i].nis == rr.records[i].nis);
    CHECK(back[i].epoch_id == rr.records[i].epoch_id);
    for (Eigen::Index k = 0; k < back[i].psi_hat.size(); ++k)
      CHECK(back[i].psi_hat(k) == rr.records[i].psi_hat(k));
  }
}

TEST_CASE("validate-config prints the effective config and derived block") {
  std::string out;
  CHECK(cli({"validate-config"}, &out) == 0);
  const auto doc = nlohmann::json::parse(out);
  CHECK(doc.at("derived").at("noise_var").get<double>() == doctest::Approx(5.12));

  const auto dir = temp_dir("valcfg");
  std::ofstream(dir / "bad.json") << "{\"unknown_key\": 1}";
  std::string err;
  CHECK(cli({"validate-config", "--config", (dir / "bad.json").string()}, nullptr, &err) == 2);
  CHECK(err.find("unknown_key") != std::string::npos);
}

TEST_CASE("the shipped default config validates and echoes sigma_w^2 = 5.12") {
  const std::string path = std::string(NLOSTRACK_SOURCE_DIR) + "/configs/default.json";
  std::string out;
  REQUIRE(cli({"validate-config", "--config", path}, &out) == 0);
  const auto doc = nlohmann::json::parse(out);
  CHECK(doc.at("derived").at("noise_var").get<double>() == 5.12);
  CHECK(doc.at("process").at("a1").get<double>() == 0.95);
  CHECK(doc.at("arrays").at("n_tx").get<int>() == 64);
  CHECK(doc.at("arrays").at("n_rx").get<int>() == 8);
  // The shipped file is the serializer's own fixed point.
  const bool fixed_point = (out == slurp(path)) || (out == slurp(path) + "\n");
  CHECK(fixed_point);
}

TEST_CASE("waypoint trajectories parse from config") {
  const auto cfg = io::parse_config_text(R"({
    "n_steps": 5,
    "scene": {"trajectory": {
      "shape": "waypoints", "speed_mps": 10.0, "dt_s": 1.0,
      "waypoints": [[0.0, 10.0], [100.0, 10.0]]
    }}
  })");
  CHECK(cfg.scene.trajectory.shape == scene::TrajectoryShape::waypoints);
  REQUIRE(cfg.scene.trajectory.waypoints.size() == 2);
  CHECK(cfg.scene.trajectory.waypoints[1].x == 100.0);
  CHECK_THROWS_AS(
      io::parse_config_text(R"({"scene": {"trajectory": {"shape": "waypoints"}}})"),
      std::invalid_argument);
}

TEST_CASE("NLOS_TRACK_THREADS caps fan-out without changing results") {
  pipeline::RunConfig cfg;
  cfg.n_steps = 20;
  const auto base = pipeline::run_campaign(cfg, 3, 2);
  setenv("NLOS_TRACK_THREADS", "1", 1);
  const auto capped = pipeline::run_campaign(cfg, 3, 2);
  unsetenv("NLOS_TRACK_THREADS");
  REQUIRE(base.per_seed.size() == capped.per_seed.size());
  for (std::size_t i = 0; i < base.per_seed.size(); ++i)
    CHECK(base.per_seed[i].median_error == capped.per_seed[i].median_error);
}

TEST_CASE("simulate twice with one seed produces byte-identical traces") {
  const auto dir = temp_dir("determinism");
  const std::vector<std::string> base{"simulate", "--steps", "40", "--seed", "7", "--a1", "1.0"};
  auto run_one = [&](const std::string& sub) {
    auto args = base;
    args.push_back("--out");
    args.push_back((dir / sub).string());
    REQUIRE(cli(args) == 0);
  };
  run_one("a");
  run_one("b");
  for (const char* name :
       {"trace_steps.csv", "trace_channel.csv", "trace_position.csv", "scene.csv",
        "run_summary.json", "effective_config.json"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
}

TEST_CASE("observation dump has one row per step") {
  const auto dir = temp_dir("obsdump");
  REQUIRE(cli({"simulate", "--steps", "5", "--out", (dir / "o").string(),
               "--dump-observations"}) == 0);
  const auto text = slurp(dir / "o" / "observations.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);  // header + 5 rows
  CHECK(text.rfind("t,re1,im1,", 0) == 0);
}

TEST_CASE("report recomputes the campaign bundle bit for bit") {
  const auto dir = temp_dir("report");
  REQUIRE(cli({"campaign", "--steps", "30", "--seeds", "3", "--a1", "1.0", "--out",
               (dir / "camp").string()}) == 0);
  REQUIRE(cli({"report", "--in", (dir / "camp").string(), "--out",
               (dir / "report.json").string()}) == 0);
  CHECK(slurp(dir / "camp" / "campaign_summary.json") == slurp(dir / "report.json"));
}

TEST_CASE("report fails loudly without records") {
  const auto dir = temp_dir("emptyreport");
  std::string err;
  CHECK(cli({"report", "--in", dir.string(), "--out", (dir / "r.json").string()}, nullptr,
            &err) != 0);
  CHECK(err.find("no run directories") != std::string::npos);

  // A run directory whose trace holds a header but no rows.
  fs::create_directories(dir / "run_0");
  std::ofstream(dir / "run_0" / "run_meta.json")
      << "{\"schema_version\":1,\"seed\":1,\"mode\":\"two_stage\",\"n_steps\":0,"
         "\"num_paths\":4,\"reacq_deadline_steps\":3}";
  std::ofstream(dir / "run_0" / "trace_steps.csv") << "t,psi_phi1\n";
  CHECK(cli({"report", "--in", dir.string(), "--out", (dir / "r.json").string()}, nullptr,
            &err) != 0);
  CHECK(err.find("no records") != std::string::npos);
}

TEST_CASE("duplicate consecutive waypoints are rejected") {
  CHECK_THROWS_AS(io::parse_config_text(R"({"scene": {"trajectory": {
    "shape": "waypoints", "waypoints": [[0.0, 0.0], [0.0, 0.0], [5.0, 0.0]]
  }}})"),
                  std::invalid_argument);
}

TEST_CASE("cli rejects unknown arguments and modes") {
  std::string err;
  CHECK(cli({"simulate", "--bogus"}, nullptr, &err) == 2);
  CHECK(cli({"simulate", "--mode", "three_stage", "--out", "/tmp/x"}, nullptr, &err) == 2);
}
