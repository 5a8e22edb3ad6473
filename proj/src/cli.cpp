#include "consbandit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "consbandit/config.hpp"
#include "consbandit/harness.hpp"

namespace consbandit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Failures after the config has been accepted: I/O, malformed inputs.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::string grid;
  std::vector<std::string> overrides;
};

json load_document(const RunArgs& args) {
  if (!args.config_path.empty() && !args.preset.empty()) {
    throw ConfigError("config", "give either --config or --preset, not both");
  }
  json doc;
  if (!args.preset.empty()) {
    const Preset* preset = find_preset(args.preset);
    if (!preset) throw ConfigError("preset", "unknown preset \"" + args.preset + "\"");
    doc = preset->config;
  } else if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("config", "cannot open " + args.config_path);
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config", "invalid JSON in " + args.config_path);
  } else {
    throw ConfigError("config", "one of --config or --preset is required");
  }
  for (const auto& o : args.overrides) apply_override(doc, o);
  return doc;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw RuntimeFailure("cannot create output directory " + dir.string());
  }
}

void execute(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& out) {
  prepare_output_dir(out_dir);
  MonteCarloOptions options;
  options.threads = default_thread_count();
  const MonteCarloResult result = monte_carlo(config, options);

  {
    auto f = open_output(out_dir / "config.json");
    f << emit_config(config).dump(2) << '\n';
  }
  {
    auto f = open_output(out_dir / "runs.csv");
    write_runs_csv(f, result.runs, config.means.size());
    if (!f) throw RuntimeFailure("write failed: " + (out_dir / "runs.csv").string());
  }
  {
    auto f = open_output(out_dir / "summary.csv");
    write_summary_csv(f, result.summary);
    if (!f) throw RuntimeFailure("write failed: " + (out_dir / "summary.csv").string());
  }
  for (const auto& row : result.summary) {
    out << row.policy << "  alpha=" << row.alpha << " n=" << row.horizon
        << "  regret=" << row.mean_pseudo_regret << " +- " << row.stderr_pseudo_regret
        << "  violations=" << row.violation_rate << '\n';
  }
}

// -- report -------------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw RuntimeFailure(path.string() + " is empty");
  return rows;
}

std::size_t column(const std::vector<std::string>& header, std::string_view name,
                   const fs::path& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw RuntimeFailure(path.string() + ": missing column \"" + std::string(name) + "\"");
  }
  return static_cast<std::size_t>(it - header.begin());
}

double to_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw RuntimeFailure(path.string() + ": not a number \"" + s + "\"");
}

void report(const fs::path& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw RuntimeFailure("no such directory " + dir.string());
  const ExperimentConfig config = parse_config_file((dir / "config.json").string());
  const Index k = config.means.size() - 1;
  const double mu0 = config.means(0);

  // Mean realized regret per (policy, alpha, n), from the per-run records.
  const fs::path runs_path = dir / "runs.csv";
  const auto runs = read_csv(runs_path);
  const auto& rh = runs.front();
  const std::size_t r_policy = column(rh, "policy", runs_path);
  const std::size_t r_alpha = column(rh, "alpha", runs_path);
  const std::size_t r_n = column(rh, "n", runs_path);
  const std::size_t r_realized = column(rh, "realized_regret", runs_path);
  std::map<std::tuple<std::string, double, Round>, std::pair<CompensatedSum, Index>> realized;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& r = runs[i];
    if (r.size() != rh.size()) throw RuntimeFailure(runs_path.string() + ": ragged row");
    auto& acc = realized[{r[r_policy], to_double(r[r_alpha], runs_path),
                          static_cast<Round>(to_double(r[r_n], runs_path))}];
    acc.first += to_double(r[r_realized], runs_path);
    ++acc.second;
  }

  const fs::path summary_path = dir / "summary.csv";
  const auto summary = read_csv(summary_path);
  const auto& sh = summary.front();
  const std::size_t s_policy = column(sh, "policy", summary_path);
  const std::size_t s_var = column(sh, "sweep_var", summary_path);
  const std::size_t s_value = column(sh, "sweep_value", summary_path);

  auto f = open_output(dir / "report.csv");
  std::ostringstream header;
  for (std::size_t c = 0; c < sh.size(); ++c) header << (c ? "," : "") << sh[c];
  header << ",alpha,n,mean_realized_regret,lower_bound_B,lower_bound_valid\n";
  f << header.str();
  out << header.str();
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& s = summary[i];
    if (s.size() != sh.size()) throw RuntimeFailure(summary_path.string() + ": ragged row");
    double alpha = config.alphas.front();
    Round n = config.horizons.front();
    const double value = to_double(s[s_value], summary_path);
    if (s[s_var] == "alpha" || s[s_var] == "none") {
      alpha = value;
    } else if (s[s_var] == "n") {
      n = static_cast<Round>(value);
    } else {
      throw RuntimeFailure(summary_path.string() + ": unknown sweep_var \"" + s[s_var] + "\"");
    }
    const auto it = realized.find({s[s_policy], alpha, n});
    const double mean_realized =
        it == realized.end() || it->second.second == 0
            ? std::numeric_limits<double>::quiet_NaN()
            : it->second.first.value() / static_cast<double>(it->second.second);
    const LowerBound lb = lower_bound_B(k, n, alpha, mu0);

    std::ostringstream line;
    for (std::size_t c = 0; c < s.size(); ++c) line << (c ? "," : "") << s[c];
    line << ',' << format_double(alpha) << ',' << n << ',' << format_double(mean_realized) << ','
         << format_double(lb.value) << ',' << (lb.valid ? 1 : 0) << '\n';
    f << line.str();
    out << line.str();
  }
  if (!f) throw RuntimeFailure("write failed: " + (dir / "report.csv").string());
}

void add_run_options(CLI::App* cmd, RunArgs& args, bool with_grid) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--preset", args.preset, "embedded preset name (see `presets`)");
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--set", args.overrides, "override a config key, key=value")
      ->allow_extra_args(false);
  if (with_grid) cmd->add_option("--grid", args.grid, "a:b:step or v1,v2,...");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conservative bandit simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::string report_dir;
  std::string show_preset;

  auto* run = app.add_subcommand("run", "run one experiment config");
  add_run_options(run, run_args, false);
  auto* sweep_alpha = app.add_subcommand("sweep-alpha", "sweep the conservatism fraction");
  add_run_options(sweep_alpha, run_args, true);
  auto* sweep_horizon = app.add_subcommand("sweep-horizon", "sweep the horizon");
  add_run_options(sweep_horizon, run_args, true);
  auto* report_cmd = app.add_subcommand("report", "join summary with the lower bound");
  report_cmd->add_option("--in", report_dir, "directory written by run/sweep")->required();
  auto* presets_cmd = app.add_subcommand("presets", "list embedded presets");
  presets_cmd->add_option("--show", show_preset, "print one preset as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*presets_cmd) {
      if (!show_preset.empty()) {
        const Preset* p = find_preset(show_preset);
        if (!p) throw ConfigError("preset", "unknown preset \"" + show_preset + "\"");
        out << p->config.dump(2) << '\n';
      } else {
        for (const auto& p : presets()) out << p.name << "  " << p.description << '\n';
      }
      return kExitOk;
    }
    if (*report_cmd) {
      report(report_dir, out);
      return kExitOk;
    }

    json doc = load_document(run_args);
    if (*sweep_alpha) {
      doc["alpha"] = run_args.grid.empty() ? default_alpha_grid() : parse_grid(run_args.grid);
      if (doc["n"].is_array()) throw ConfigError("n", "sweep-alpha needs a single horizon");
    } else if (*sweep_horizon) {
      if (!run_args.grid.empty()) {
        std::vector<Round> horizons;
        for (double v : parse_grid(run_args.grid)) {
          if (!(v >= 1.0) || std::floor(v) != v) {
            throw ConfigError("grid", "horizons must be positive integers");
          }
          horizons.push_back(static_cast<Round>(v));
        }
        doc["n"] = horizons;
      }
      if (!doc["n"].is_array()) throw ConfigError("n", "sweep-horizon needs a grid of horizons");
      if (doc["alpha"].is_array()) throw ConfigError("alpha", "sweep-horizon needs a single alpha");
    }
    const ExperimentConfig config = parse_config(doc);
    execute(config, run_args.out_dir, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace consbandit
