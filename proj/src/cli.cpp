#include "nlostrack/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>

#include "nlostrack/config.hpp"
#include "nlostrack/csv.hpp"
#include "nlostrack/pipeline.hpp"
#include "nlostrack/report.hpp"
#include "nlostrack/scene.hpp"
#include "nlostrack/stats.hpp"
#include "nlostrack/trace.hpp"

namespace nlostrack::io {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<int> steps;
  std::optional<double> snr_db;
  std::optional<double> a1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (JSON); defaults apply when omitted");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--mode", o.mode, "two_stage | single_stage");
  cmd->add_option("--steps", o.steps, "Number of simulation steps");
  cmd->add_option("--snr-db", o.snr_db, "SNR in dB");
  cmd->add_option("--a1", o.a1, "AR(1) coefficient of the angle process");
}

pipeline::RunConfig effective_config(const CommonOpts& o) {
  pipeline::RunConfig cfg =
      o.config_path.empty() ? pipeline::RunConfig{} : load_config_file(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.mode) {
    if (*o.mode == "two_stage")
      cfg.mode = pipeline::Mode::two_stage;
    else if (*o.mode == "single_stage")
      cfg.mode = pipeline::Mode::single_stage;
    else
      throw std::invalid_argument("unknown mode '" + *o.mode + "'");
  }
  if (o.steps) cfg.n_steps = *o.steps;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.a1) cfg.process.a1 = *o.a1;
  cfg.validate();
  return cfg;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void write_run_outputs(const fs::path& dir, const pipeline::RunConfig& cfg,
                       const pipeline::RunResult& result) {
  fs::create_directories(dir);

  {
    std::ofstream os(dir / "trace_steps.csv", std::ios::binary);
    write_step_records_csv(os, result.records, result.num_paths);
  }
  {
    std::ofstream os(dir / "trace_channel.csv", std::ios::binary);
    write_channel_trace_csv(os, result.records, result.num_paths);
  }
  {
    std::ofstream os(dir / "trace_position.csv", std::ios::binary);
    write_position_trace_csv(os, result.records);
  }
  {
    RngStream scene_rng(cfg.seed, "scene");
    scene::SceneConfig scene_cfg = cfg.scene;
    scene_cfg.trajectory.duration = cfg.duration();
    const auto frames = scene::build_scene(scene_cfg, scene_rng);
    std::ofstream os(dir / "scene.csv", std::ios::binary);
    write_scene_csv(os, frames);
  }

  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["seed"] = cfg.seed;
  meta["mode"] = mode_name(cfg.mode);
  meta["n_steps"] = cfg.n_steps;
  meta["num_paths"] = result.num_paths;
  meta["reacq_deadline_steps"] = cfg.reacq_deadline;
  write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");
  write_text_file(dir / "effective_config.json", serialize_config(cfg).dump(2) + "\n");
}

int cmd_simulate(const CommonOpts& o, const std::string& out_dir, bool dump_observations,
                 std::ostream& out) {
  pipeline::RunConfig cfg = effective_config(o);
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  pipeline::ObservationSink sink;
  std::ofstream obs_file;
  if (dump_observations) {
    obs_file.open(dir / "observations.csv", std::ios::binary);
    obs_file << "t";
    const int m = cfg.arrays.n_rx * cfg.arrays.n_tx;
    for (int i = 1; i <= m; ++i) obs_file << ",re" << i << ",im" << i;
    obs_file << "\n";
    sink = [&obs_file](int t, const Eigen::MatrixXcd& y) {
      obs_file << t;
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i)
          obs_file << ',' << format_double(y(i, j).real()) << ','
                   << format_double(y(i, j).imag());
      obs_file << "\n";
    };
  }

  const auto result = pipeline::run(cfg, sink);
  write_run_outputs(dir, cfg, result);

  const auto det = pipeline::detection_stats(result.records, cfg.reacq_deadline);
  std::vector<double> errors;
  errors.reserve(result.records.size());
  for (const auto& r : result.records) errors.push_back(r.pos_error);
  std::sort(errors.begin(), errors.end());

  nlohmann::ordered_json summary;
  summary["schema_version"] = 1;
  summary["seed"] = cfg.seed;
  summary["mode"] = mode_name(cfg.mode);
  summary["median_error_m"] = stats::quantile_sorted(errors, 0.5);
  summary["detection"] = {{"epoch_boundaries", det.epoch_boundaries},
                          {"reacquired_within_deadline", det.reacquired_within_deadline},
                          {"triggers", det.triggers},
                          {"false_alarm_rate", det.false_alarm_rate}};
  write_text_file(dir / "run_summary.json", summary.dump(2) + "\n");

  out << "wrote " << (dir / "trace_steps.csv").string() << " (" << result.records.size()
      << " records)\n";
  return 0;
}

int cmd_campaign(const CommonOpts& o, const std::string& out_dir, int n_seeds, int threads,
                 std::ostream& out) {
  pipeline::RunConfig cfg = effective_config(o);
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  const auto runs = pipeline::run_campaign_raw(cfg, n_seeds, threads);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    pipeline::RunConfig rc = cfg;
    rc.seed = runs[i].first;
    write_run_outputs(dir / ("run_" + std::to_string(i)), rc, runs[i].second);
  }

  const auto agg = pipeline::aggregate_runs(runs, cfg.reacq_deadline);
  const auto bundle = campaign_to_json(agg, n_seeds, mode_name(cfg.mode));
  write_text_file(dir / "campaign_summary.json", bundle.dump(2) + "\n");
  write_text_file(dir / "effective_config.json", serialize_config(cfg).dump(2) + "\n");

  out << "campaign: " << n_seeds << " seeds, pooled median error " << agg.median_error
      << " m\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_path, std::ostream& out) {
  const fs::path dir(in_dir);
  if (!fs::exists(dir)) throw std::runtime_error("report: no such directory '" + in_dir + "'");

  std::vector<fs::path> run_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("run_", 0) == 0)
      run_dirs.push_back(e.path());
  if (run_dirs.empty() && fs::exists(dir / "trace_steps.csv")) run_dirs.push_back(dir);
  if (run_dirs.empty()) throw std::runtime_error("report: no run directories under '" + in_dir + "'");

  std::sort(run_dirs.begin(), run_dirs.end(), [](const fs::path& a, const fs::path& b) {
    auto index = [](const fs::path& p) {
      const auto name = p.filename().string();
      return name.rfind("run_", 0) == 0 ? std::stol(name.substr(4)) : -1L;
    };
    return index(a) < index(b);
  });

  std::vector<std::pair<std::uint64_t, pipeline::RunResult>> runs;
  int deadline = 3;
  std::string mode = "two_stage";
  for (const auto& rd : run_dirs) {
    std::ifstream meta_in(rd / "run_meta.json");
    if (!meta_in) throw std::runtime_error("report: missing run_meta.json in " + rd.string());
    const auto meta = nlohmann::json::parse(meta_in);
    deadline = meta.at("reacq_deadline_steps").get<int>();
    mode = meta.at("mode").get<std::string>();

    std::ifstream trace_in(rd / "trace_steps.csv");
    if (!trace_in) throw std::runtime_error("report: missing trace_steps.csv in " + rd.string());
    pipeline::RunResult rr;
    rr.records = read_step_records_csv(trace_in);
    if (rr.records.empty()) throw std::runtime_error("report: no records in " + rd.string());
    rr.num_paths = meta.at("num_paths").get<int>();
    runs.emplace_back(meta.at("seed").get<std::uint64_t>(), std::move(rr));
  }

  const auto agg = pipeline::aggregate_runs(runs, deadline);
  const auto bundle = campaign_to_json(agg, static_cast<int>(runs.size()), mode);
  write_text_file(out_path, bundle.dump(2) + "\n");
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_validate(const CommonOpts& o, std::ostream& out, std::ostream& err) {
  const pipeline::RunConfig cfg = effective_config(o);
  const auto warning = cfg.process.stationarity_warning(2 * cfg.scene.scatterers.num_paths);
  if (!warning.empty()) err << "warning: " << warning << "\n";
  out << serialize_config(cfg).dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NLoS mmWave vehicle positioning simulator"};
  app.require_subcommand(1);

  CommonOpts sim_opts, camp_opts, val_opts;
  std::string sim_out = "out";
  bool dump_observations = false;
  auto* sim = app.add_subcommand("simulate", "Run one seed and write traces");
  add_common(sim, sim_opts);
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_flag("--dump-observations", dump_observations, "Also write per-step beam matrices");

  std::string camp_out = "out";
  int n_seeds = 20;
  int threads = 0;
  auto* camp = app.add_subcommand("campaign", "Run many seeds and aggregate");
  add_common(camp, camp_opts);
  camp->add_option("--out", camp_out, "Output directory");
  camp->add_option("--seeds", n_seeds, "Number of seeds");
  camp->add_option("--threads", threads, "Parallel workers (0 = hardware)");

  std::string rep_in, rep_out = "report.json";
  auto* rep = app.add_subcommand("report", "Recompute the report bundle from stored traces");
  rep->add_option("--in", rep_in, "Directory with run_*/trace_steps.csv")->required();
  rep->add_option("--out", rep_out, "Output JSON path");

  auto* val = app.add_subcommand("validate-config", "Parse and echo the effective config");
  add_common(val, val_opts);

  std::vector<const char*> argv;
  argv.push_back("nlostrack");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts, sim_out, dump_observations, out);
    if (camp->parsed()) return cmd_campaign(camp_opts, camp_out, n_seeds, threads, out);
    if (rep->parsed()) return cmd_report(rep_in, rep_out, out);
    if (val->parsed()) return cmd_validate(val_opts, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace nlostrack::io
