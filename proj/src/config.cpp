#include "nlostrack/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace nlostrack::io {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw std::invalid_argument("config: " + path + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key '" + path + key + "'");
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

void get_point(const json& obj, const char* key, Point2& out) {
  if (!obj.contains(key)) return;
  const auto& a = obj.at(key);
  if (!a.is_array() || a.size() != 2)
    throw std::invalid_argument(std::string("config: '") + key + "' must be [x, y]");
  out.x = a[0].get<double>();
  out.y = a[1].get<double>();
}

scene::TrajectoryShape parse_shape(const std::string& s) {
  if (s == "s_curve") return scene::TrajectoryShape::s_curve;
  if (s == "waypoints") return scene::TrajectoryShape::waypoints;
  throw std::invalid_argument("config: unknown trajectory shape '" + s + "'");
}

channel::CodebookKind parse_codebook(const std::string& s) {
  if (s == "dft") return channel::CodebookKind::dft;
  if (s == "uniform_angle") return channel::CodebookKind::uniform_angle;
  throw std::invalid_argument("config: unknown codebook '" + s + "'");
}

channel::GainModel parse_gain_model(const std::string& s) {
  if (s == "unit_rho") return channel::GainModel::unit_rho;
  if (s == "inverse_range") return channel::GainModel::inverse_range;
  if (s == "unit_attenuation") return channel::GainModel::unit_attenuation;
  throw std::invalid_argument("config: unknown gain model '" + s + "'");
}

pipeline::Mode parse_mode(const std::string& s) {
  if (s == "two_stage") return pipeline::Mode::two_stage;
  if (s == "single_stage") return pipeline::Mode::single_stage;
  throw std::invalid_argument("config: unknown mode '" + s + "'");
}

pipeline::ReacqPolicy parse_policy(const std::string& s) {
  if (s == "detector") return pipeline::ReacqPolicy::detector;
  if (s == "forced_oracle") return pipeline::ReacqPolicy::forced_oracle;
  throw std::invalid_argument("config: unknown reacq policy '" + s + "'");
}

triangulation::WeightPolicy parse_weights(const std::string& s) {
  if (s == "uniform") return triangulation::WeightPolicy::uniform;
  if (s == "innovation_inverse") return triangulation::WeightPolicy::innovation_inverse;
  throw std::invalid_argument("config: unknown weight policy '" + s + "'");
}

}  // namespace

pipeline::RunConfig parse_config(const json& doc) {
  pipeline::RunConfig cfg;
  check_keys(doc, "",
             {"schema_version", "seed", "n_steps", "mode", "snr_db", "noise_var_override",
              "arrays", "codebook", "gain_model", "scene", "process", "change_test",
              "position_kf", "init_noise_std", "imu", "reacq_policy", "reacq_deadline_steps",
              "gamma_bracket_deg", "weights", "derived"});

  if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("config: unsupported schema_version");

  get_to(doc, "seed", cfg.seed);
  get_to(doc, "n_steps", cfg.n_steps);
  if (doc.contains("mode")) cfg.mode = parse_mode(doc.at("mode").get<std::string>());
  get_to(doc, "snr_db", cfg.snr_db);
  if (doc.contains("noise_var_override") && !doc.at("noise_var_override").is_null())
    cfg.noise_var_override = doc.at("noise_var_override").get<double>();
  if (doc.contains("codebook")) cfg.codebook = parse_codebook(doc.at("codebook").get<std::string>());
  if (doc.contains("gain_model"))
    cfg.gain_model = parse_gain_model(doc.at("gain_model").get<std::string>());
  get_to(doc, "init_noise_std", cfg.init_noise_std);
  if (doc.contains("reacq_policy"))
    cfg.reacq_policy = parse_policy(doc.at("reacq_policy").get<std::string>());
  get_to(doc, "reacq_deadline_steps", cfg.reacq_deadline);
  get_to(doc, "gamma_bracket_deg", cfg.gamma_bracket_deg);
  if (doc.contains("weights")) cfg.weights = parse_weights(doc.at("weights").get<std::string>());

  if (doc.contains("arrays")) {
    const auto& a = doc.at("arrays");
    check_keys(a, "arrays.", {"n_tx", "n_rx", "carrier_freq_hz"});
    get_to(a, "n_tx", cfg.arrays.n_tx);
    get_to(a, "n_rx", cfg.arrays.n_rx);
    get_to(a, "carrier_freq_hz", cfg.arrays.carrier_freq);
  }

  if (doc.contains("scene")) {
    const auto& s = doc.at("scene");
    check_keys(s, "scene.", {"bs", "trajectory", "scatterers"});
    get_point(s, "bs", cfg.scene.bs_pos);
    if (s.contains("trajectory")) {
      const auto& t = s.at("trajectory");
      check_keys(t, "scene.trajectory.",
                 {"shape", "speed_mps", "dt_s", "area_width_m", "area_height_m", "arc_radius_m",
                  "waypoints"});
      if (t.contains("shape"))
        cfg.scene.trajectory.shape = parse_shape(t.at("shape").get<std::string>());
      get_to(t, "speed_mps", cfg.scene.trajectory.speed);
      get_to(t, "dt_s", cfg.scene.trajectory.dt);
      get_to(t, "area_width_m", cfg.scene.trajectory.area_width);
      get_to(t, "area_height_m", cfg.scene.trajectory.area_height);
      get_to(t, "arc_radius_m", cfg.scene.trajectory.arc_radius);
      if (t.contains("waypoints")) {
        cfg.scene.trajectory.waypoints.clear();
        for (const auto& w : t.at("waypoints")) {
          if (!w.is_array() || w.size() != 2)
            throw std::invalid_argument("config: waypoints must be [x, y] pairs");
          cfg.scene.trajectory.waypoints.push_back({w[0].get<double>(), w[1].get<double>()});
        }
      }
    }
    if (s.contains("scatterers")) {
      const auto& sc = s.at("scatterers");
      check_keys(sc, "scene.scatterers.",
                 {"redraw_distance_m", "placement_radius_m", "num_paths"});
      get_to(sc, "redraw_distance_m", cfg.scene.scatterers.redraw_distance);
      get_to(sc, "placement_radius_m", cfg.scene.scatterers.placement_radius);
      get_to(sc, "num_paths", cfg.scene.scatterers.num_paths);
    }
  }

  if (doc.contains("process")) {
    const auto& p = doc.at("process");
    check_keys(p, "process.", {"ar_order", "a1", "process_noise_var", "ar_mean"});
    get_to(p, "ar_order", cfg.process.ar_order);
    get_to(p, "a1", cfg.process.a1);
    get_to(p, "process_noise_var", cfg.process.process_noise_var);
    if (p.contains("ar_mean") && !p.at("ar_mean").empty()) {
      const auto v = p.at("ar_mean").get<std::vector<double>>();
      cfg.process.ar_mean =
          Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }

  if (doc.contains("change_test")) {
    const auto& c = doc.at("change_test");
    check_keys(c, "change_test.", {"p_fa", "window"});
    get_to(c, "p_fa", cfg.change.p_fa);
    get_to(c, "window", cfg.change.window);
  }

  if (doc.contains("position_kf")) {
    const auto& p = doc.at("position_kf");
    check_keys(p, "position_kf.", {"process_noise_var", "meas_noise_var"});
    get_to(p, "process_noise_var", cfg.poskf.process_noise_var);
    if (p.contains("meas_noise_var")) {
      const auto& m = p.at("meas_noise_var");
      if (m.is_number()) {
        cfg.poskf.meas_noise_var.setConstant(m.get<double>());
      } else {
        const auto v = m.get<std::vector<double>>();
        if (v.size() != 7)
          throw std::invalid_argument("config: position_kf.meas_noise_var needs 7 entries");
        for (int i = 0; i < 7; ++i) cfg.poskf.meas_noise_var(i) = v[static_cast<std::size_t>(i)];
      }
    }
  }

  if (doc.contains("imu")) {
    const auto& i = doc.at("imu");
    check_keys(i, "imu.", {"vel_noise_std", "acc_noise_std"});
    get_to(i, "vel_noise_std", cfg.imu_vel_noise_std);
    get_to(i, "acc_noise_std", cfg.imu_acc_noise_std);
  }

  cfg.poskf.dt = cfg.scene.trajectory.dt;
  cfg.validate();
  return cfg;
}

pipeline::RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return parse_config(doc);
}

pipeline::RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string mode_name(pipeline::Mode mode) {
  return mode == pipeline::Mode::two_stage ? "two_stage" : "single_stage";
}

nlohmann::ordered_json serialize_config(const pipeline::RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  j["n_steps"] = cfg.n_steps;
  j["mode"] = mode_name(cfg.mode);
  j["snr_db"] = cfg.snr_db;
  if (cfg.noise_var_override)
    j["noise_var_override"] = *cfg.noise_var_override;
  else
    j["noise_var_override"] = nullptr;

  j["arrays"] = {{"n_tx", cfg.arrays.n_tx},
                 {"n_rx", cfg.arrays.n_rx},
                 {"carrier_freq_hz", cfg.arrays.carrier_freq}};
  j["codebook"] = cfg.codebook == channel::CodebookKind::dft ? "dft" : "uniform_angle";
  switch (cfg.gain_model) {
    case channel::GainModel::unit_rho: j["gain_model"] = "unit_rho"; break;
    case channel::GainModel::inverse_range: j["gain_model"] = "inverse_range"; break;
    case channel::GainModel::unit_attenuation: j["gain_model"] = "unit_attenuation"; break;
  }

  auto waypoints = nlohmann::ordered_json::array();
  for (const auto& w : cfg.scene.trajectory.waypoints) waypoints.push_back({w.x, w.y});
  j["scene"] = {
      {"bs", {cfg.scene.bs_pos.x, cfg.scene.bs_pos.y}},
      {"trajectory",
       {{"shape",
         cfg.scene.trajectory.shape == scene::TrajectoryShape::s_curve ? "s_curve" : "waypoints"},
        {"speed_mps", cfg.scene.trajectory.speed},
        {"dt_s", cfg.scene.trajectory.dt},
        {"area_width_m", cfg.scene.trajectory.area_width},
        {"area_height_m", cfg.scene.trajectory.area_height},
        {"arc_radius_m", cfg.scene.trajectory.arc_radius},
        {"waypoints", waypoints}}},
      {"scatterers",
       {{"redraw_distance_m", cfg.scene.scatterers.redraw_distance},
        {"placement_radius_m", cfg.scene.scatterers.placement_radius},
        {"num_paths", cfg.scene.scatterers.num_paths}}}};

  std::vector<double> ar_mean;
  for (Eigen::Index i = 0; i < cfg.process.ar_mean.size(); ++i)
    ar_mean.push_back(cfg.process.ar_mean(i));
  j["process"] = {{"ar_order", cfg.process.ar_order},
                  {"a1", cfg.process.a1},
                  {"process_noise_var", cfg.process.process_noise_var},
                  {"ar_mean", ar_mean}};

  j["change_test"] = {{"p_fa", cfg.change.p_fa}, {"window", cfg.change.window}};

  std::vector<double> meas(7);
  for (int i = 0; i < 7; ++i) meas[static_cast<std::size_t>(i)] = cfg.poskf.meas_noise_var(i);
  j["position_kf"] = {{"process_noise_var", cfg.poskf.process_noise_var},
                      {"meas_noise_var", meas}};

  j["init_noise_std"] = cfg.init_noise_std;
  j["imu"] = {{"vel_noise_std", cfg.imu_vel_noise_std},
              {"acc_noise_std", cfg.imu_acc_noise_std}};
  j["reacq_policy"] =
      cfg.reacq_policy == pipeline::ReacqPolicy::detector ? "detector" : "forced_oracle";
  j["reacq_deadline_steps"] = cfg.reacq_deadline;
  j["gamma_bracket_deg"] = cfg.gamma_bracket_deg;
  switch (cfg.weights) {
    case triangulation::WeightPolicy::uniform: j["weights"] = "uniform"; break;
    case triangulation::WeightPolicy::innovation_inverse:
      j["weights"] = "innovation_inverse";
      break;
  }

  j["derived"] = {{"noise_var", cfg.noise_variance()},
                  {"wavelength_m", cfg.arrays.wavelength()},
                  {"change_dof", 2 * cfg.arrays.n_rx * cfg.arrays.n_tx},
                  {"duration_s", cfg.duration()}};
  return j;
}

}  // namespace nlostrack::io
