#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "nlostrack/pipeline.hpp"

namespace nlostrack::io {

/// Empirical CDF at the sorted unique error values; cdf(max) = 1.
/// Throws on empty input.
std::vector<std::pair<double, double>> compute_cdf(std::vector<double> errors);

nlohmann::ordered_json campaign_to_json(const pipeline::CampaignResult& result, int n_seeds,
                                        const std::string& mode_name);

}  // namespace nlostrack::io
