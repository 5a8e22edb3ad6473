#include "consbandit/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

namespace consbandit {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kRequired = {
    "means", "alpha", "n", "delta", "policies", "replications", "seed_base"};
constexpr std::array<std::string_view, 7> kOptional = {
    "noise", "sigma", "psi", "environment", "adversary", "table", "expectation_mode"};

bool is_allowed_key(std::string_view key) {
  return std::find(kRequired.begin(), kRequired.end(), key) != kRequired.end() ||
         std::find(kOptional.begin(), kOptional.end(), key) != kOptional.end();
}

double read_number(const json& v, const char* field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

Round read_horizon(const json& v) {
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n < 1) throw ConfigError("n", "must be a positive integer");
    return n;
  }
  // Accept 1e4-style floats when they are integral.
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 1.0 && x < 9.2e18 && std::floor(x) == x) return static_cast<Round>(x);
  }
  throw ConfigError("n", "must be a positive integer");
}

std::string read_string(const json& v, const char* field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!is_allowed_key(key)) throw ConfigError(key, "unknown key");
  }
  for (std::string_view key : kRequired) {
    if (!doc.contains(key)) throw ConfigError(std::string(key), "missing required field");
  }

  ExperimentConfig config;

  const json& means = doc.at("means");
  if (!means.is_array() || means.size() < 2) {
    throw ConfigError("means", "expected a list of at least two numbers");
  }
  config.means.resize(static_cast<Index>(means.size()));
  for (std::size_t i = 0; i < means.size(); ++i) {
    config.means(static_cast<Index>(i)) = read_number(means[i], "means");
  }

  const json& alpha = doc.at("alpha");
  const json& n = doc.at("n");
  if (alpha.is_array() && n.is_array()) {
    throw ConfigError("alpha", "alpha and n cannot both be lists");
  }
  config.alphas.clear();
  if (alpha.is_array()) {
    config.sweep = SweepKind::alpha;
    for (const auto& a : alpha) config.alphas.push_back(read_number(a, "alpha"));
  } else {
    config.alphas.push_back(read_number(alpha, "alpha"));
  }
  config.horizons.clear();
  if (n.is_array()) {
    config.sweep = SweepKind::horizon;
    for (const auto& h : n) config.horizons.push_back(read_horizon(h));
  } else {
    config.horizons.push_back(read_horizon(n));
  }

  const json& delta = doc.at("delta");
  if (delta.is_string()) {
    if (delta.get<std::string>() != "1/n") {
      throw ConfigError("delta", "expected a number or \"1/n\"");
    }
    config.delta = DeltaSpec{true, 0.0};
  } else {
    config.delta = DeltaSpec{false, read_number(delta, "delta")};
  }

  const json& policies = doc.at("policies");
  if (!policies.is_array()) throw ConfigError("policies", "expected a list of names");
  for (const auto& p : policies) config.policies.push_back(read_string(p, "policies"));

  const json& reps = doc.at("replications");
  if (!reps.is_number_integer() || reps.get<std::int64_t>() < 1) {
    throw ConfigError("replications", "must be a positive integer");
  }
  config.replications = reps.get<std::int64_t>();

  const json& seed = doc.at("seed_base");
  if (!seed.is_number_unsigned() &&
      !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw ConfigError("seed_base", "must be a nonnegative integer");
  }
  config.seed_base = seed.get<std::uint64_t>();

  if (doc.contains("noise")) {
    config.environment.noise = parse_noise_kind(read_string(doc["noise"], "noise"));
  }
  if (doc.contains("sigma")) config.environment.sigma = read_number(doc["sigma"], "sigma");
  if (doc.contains("psi")) config.psi = parse_psi_variant(read_string(doc["psi"], "psi"));
  if (doc.contains("environment")) {
    const std::string kind = read_string(doc["environment"], "environment");
    if (kind == "stochastic") {
      config.environment.kind = EnvironmentKind::stochastic;
    } else if (kind == "adversarial") {
      config.environment.kind = EnvironmentKind::adversarial;
    } else {
      throw ConfigError("environment", "expected \"stochastic\" or \"adversarial\"");
    }
  }
  if (doc.contains("adversary")) {
    config.environment.adversary = read_string(doc["adversary"], "adversary");
  }
  if (doc.contains("table")) {
    config.environment.table_path = read_string(doc["table"], "table");
    if (config.environment.kind != EnvironmentKind::adversarial) {
      throw ConfigError("table", "reward tables need environment \"adversarial\"");
    }
    try {
      config.environment.table = std::make_shared<const RewardTable>(
          read_reward_table_file(config.environment.table_path));
    } catch (const MalformedEnvironment& e) {
      throw ConfigError("table", e.what());
    }
  }
  if (doc.contains("expectation_mode")) {
    if (!doc["expectation_mode"].is_boolean()) {
      throw ConfigError("expectation_mode", "expected true or false");
    }
    config.expectation_mode = doc["expectation_mode"].get<bool>();
  }

  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json emit_config(const ExperimentConfig& config) {
  json doc;
  doc["means"] = std::vector<double>(config.means.data(), config.means.data() + config.means.size());
  if (config.sweep == SweepKind::alpha) {
    doc["alpha"] = config.alphas;
  } else {
    doc["alpha"] = config.alphas.front();
  }
  if (config.sweep == SweepKind::horizon) {
    doc["n"] = config.horizons;
  } else {
    doc["n"] = config.horizons.front();
  }
  if (config.delta.inverse_horizon) {
    doc["delta"] = "1/n";
  } else {
    doc["delta"] = config.delta.value;
  }
  doc["policies"] = config.policies;
  doc["replications"] = config.replications;
  doc["seed_base"] = config.seed_base;
  doc["noise"] = std::string(to_string(config.environment.noise));
  doc["sigma"] = config.environment.sigma;
  doc["psi"] = std::string(to_string(config.psi));
  doc["environment"] =
      config.environment.kind == EnvironmentKind::adversarial ? "adversarial" : "stochastic";
  doc["adversary"] = config.environment.adversary;
  if (!config.environment.table_path.empty()) doc["table"] = config.environment.table_path;
  doc["expectation_mode"] = config.expectation_mode;
  return doc;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("set", "expected key=value, got \"" + std::string(assignment) + "\"");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  if (!is_allowed_key(key)) throw ConfigError(key, "unknown key");
  json parsed = json::parse(value, nullptr, false);
  doc[key] = parsed.is_discarded() ? json(value) : parsed;
}

namespace {

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("grid", "not a number: \"" + std::string(s) + "\"");
  }
  return x;
}

}  // namespace

std::vector<double> parse_grid(std::string_view grid) {
  std::vector<double> values;
  if (grid.find(':') != std::string_view::npos) {
    const auto c1 = grid.find(':');
    const auto c2 = grid.find(':', c1 + 1);
    if (c2 == std::string_view::npos || grid.find(':', c2 + 1) != std::string_view::npos) {
      throw ConfigError("grid", "expected start:stop:step");
    }
    const double start = parse_double(grid.substr(0, c1));
    const double stop = parse_double(grid.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_double(grid.substr(c2 + 1));
    if (!(step > 0.0) || !(stop >= start)) {
      throw ConfigError("grid", "need step > 0 and stop >= start");
    }
    // Multiply rather than accumulate so that 0.05:1:0.05 hits 1 exactly.
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-6));
    for (std::int64_t i = 0; i <= count; ++i) {
      values.push_back(i == count && std::abs(start + i * step - stop) <= step * 1e-6
                           ? stop
                           : start + static_cast<double>(i) * step);
    }
  } else {
    std::size_t pos = 0;
    while (pos <= grid.size()) {
      const auto comma = std::min(grid.find(',', pos), grid.size());
      values.push_back(parse_double(grid.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  if (values.empty()) throw ConfigError("grid", "empty grid");
  return values;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid{0.01};
  for (int i = 1; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    const json means = {0.5, 0.6, 0.4, 0.4, 0.4};
    const json roster = {"ucb", "cucb", "cucb-unknown-mu0", "budgetfirst", "unbalanced-moss"};
    std::vector<Preset> list;
    list.push_back(Preset{
        "fig2", "regret vs alpha, n = 10^4, delta = 1/n",
        json{{"means", means},
             {"alpha", default_alpha_grid()},
             {"n", 10000},
             {"delta", "1/n"},
             {"policies", roster},
             {"replications", 4000},
             {"seed_base", 2016},
             {"noise", "gaussian"},
             {"sigma", 1.0},
             {"psi", "refined"}}});
    list.push_back(Preset{
        "fig3", "regret vs n, alpha = 0.1, delta = 1/n",
        json{{"means", means},
             {"alpha", 0.1},
             {"n", {100, 500, 1000, 2000, 5000, 10000, 20000, 50000, 100000}},
             {"delta", "1/n"},
             {"policies", roster},
             {"replications", 4000},
             {"seed_base", 2016},
             {"noise", "gaussian"},
             {"sigma", 1.0},
             {"psi", "refined"}}});
    return list;
  }();
  return all;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace consbandit
