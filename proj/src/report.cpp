#include "nlostrack/report.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlostrack::io {

std::vector<std::pair<double, double>> compute_cdf(std::vector<double> errors) {
  if (errors.empty()) throw std::invalid_argument("compute_cdf: empty input");
  std::sort(errors.begin(), errors.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i + 1 < errors.size() && errors[i + 1] == errors[i]) continue;
    cdf.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

nlohmann::ordered_json campaign_to_json(const pipeline::CampaignResult& result, int n_seeds,
                                        const std::string& mode_name) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["mode"] = mode_name;
  j["n_seeds"] = n_seeds;

  j["summary"] = {{"median_error_m", result.median_error},
                  {"p90_error_m", result.p90_error},
                  {"p95_error_m", result.p95_error}};

  auto seeds = nlohmann::ordered_json::array();
  for (const auto& s : result.per_seed) {
    seeds.push_back({{"seed", s.seed},
                     {"median_error_m", s.median_error},
                     {"p90_error_m", s.p90_error},
                     {"p95_error_m", s.p95_error},
                     {"n_records", s.n_records}});
  }
  j["per_seed"] = seeds;

  auto cdf = nlohmann::ordered_json::array();
  for (const auto& [e, p] : result.cdf) cdf.push_back({e, p});
  j["error_cdf"] = cdf;

  j["angle_mse"] = {{"aod_mean", result.aod_mse_mean},
                    {"aoa_mean", result.aoa_mse_mean},
                    {"aod_per_step", result.aod_mse},
                    {"aoa_per_step", result.aoa_mse}};

  const auto& d = result.detection;
  j["detection"] = {{"epoch_boundaries", d.epoch_boundaries},
                    {"reacquired_within_deadline", d.reacquired_within_deadline},
                    {"deadline_steps", d.deadline_steps},
                    {"liveness_fraction", d.liveness_fraction},
                    {"triggers", d.triggers},
                    {"false_alarms", d.false_alarms},
                    {"eligible_steps", d.eligible_steps},
                    {"false_alarm_rate", d.false_alarm_rate}};
  return j;
}

}  // namespace nlostrack::io
