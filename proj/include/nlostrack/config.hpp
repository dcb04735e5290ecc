#pragma once

#include <json.hpp>
#include <string>

#include "nlostrack/pipeline.hpp"

namespace nlostrack::io {

/// Parse a config document. Missing keys take defaults; unknown keys are
/// rejected with a diagnostic naming the offending path.
pipeline::RunConfig parse_config(const nlohmann::json& doc);

pipeline::RunConfig parse_config_text(const std::string& text);

pipeline::RunConfig load_config_file(const std::string& path);

/// Effective config with every field explicit, plus a recomputed "derived"
/// block (sigma_w^2, wavelength, change-test dof, duration). The output is a
/// valid input: parse -> serialize is a fixed point.
nlohmann::ordered_json serialize_config(const pipeline::RunConfig& cfg);

std::string mode_name(pipeline::Mode mode);

}  // namespace nlostrack::io
