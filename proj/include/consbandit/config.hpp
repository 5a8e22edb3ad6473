#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "consbandit/harness.hpp"

namespace consbandit {

/// Config keys accepted by parse_config; anything else is rejected.
///   required: means, alpha, n, delta, policies, replications, seed_base
///   optional: noise, sigma, psi, environment, adversary, table, expectation_mode
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_file(const std::string& path);

/// Inverse of parse_config: parse_config(emit_config(c)) == c.
nlohmann::json emit_config(const ExperimentConfig& config);

/// Applies "key=value" to a config document. The value is read as JSON when
/// it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// "a:b:step" (inclusive, b within step/1e6) or "v1,v2,...".
std::vector<double> parse_grid(std::string_view grid);

/// Default alpha grid: 0.01 followed by 0.05, 0.10, ..., 1.00.
std::vector<double> default_alpha_grid();

struct Preset {
  std::string name;
  std::string description;
  nlohmann::json config;
};

const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

}  // namespace consbandit
