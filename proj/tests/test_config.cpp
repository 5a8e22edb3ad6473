#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "consbandit/config.hpp"

using namespace consbandit;
using nlohmann::json;

namespace {

void check_same(const ExperimentConfig& a, const ExperimentConfig& b) {
  CHECK(a.means == b.means);
  CHECK(a.alphas == b.alphas);
  CHECK(a.horizons == b.horizons);
  CHECK(a.sweep == b.sweep);
  CHECK(a.delta.inverse_horizon == b.delta.inverse_horizon);
  CHECK(a.delta.value == b.delta.value);
  CHECK(a.policies == b.policies);
  CHECK(a.replications == b.replications);
  CHECK(a.seed_base == b.seed_base);
  CHECK(a.environment.kind == b.environment.kind);
  CHECK(a.environment.noise == b.environment.noise);
  CHECK(a.environment.sigma == b.environment.sigma);
  CHECK(a.environment.adversary == b.environment.adversary);
  CHECK(a.environment.table_path == b.environment.table_path);
  CHECK(a.psi == b.psi);
  CHECK(a.expectation_mode == b.expectation_mode);
}

json minimal() {
  return json{{"means", {0.5, 0.6, 0.4}},
              {"alpha", 0.1},
              {"n", 1000},
              {"delta", 0.05},
              {"policies", {"cucb"}},
              {"replications", 10},
              {"seed_base", 1}};
}

std::string field_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "none";
}

}  // namespace

TEST_CASE("presets round-trip through emit and parse") {
  for (const auto& preset : presets()) {
    CAPTURE(preset.name);
    const ExperimentConfig c = parse_config(preset.config);
    const json emitted = emit_config(c);
    check_same(parse_config(emitted), c);
    CHECK(emit_config(parse_config(emitted)) == emitted);
    // Through text as well.
    check_same(parse_config(json::parse(emitted.dump())), c);
  }
}

TEST_CASE("fig2 and fig3 presets") {
  const ExperimentConfig fig2 = parse_config(find_preset("fig2")->config);
  CHECK(fig2.means == Eigen::VectorXd{{0.5, 0.6, 0.4, 0.4, 0.4}});
  CHECK(fig2.sweep == SweepKind::alpha);
  REQUIRE(fig2.alphas.size() == 21);
  CHECK(fig2.alphas.front() == 0.01);
  CHECK(fig2.alphas[1] == 0.05);
  CHECK(fig2.alphas.back() == 1.0);
  CHECK(fig2.horizons == std::vector<Round>{10000});
  CHECK(fig2.delta.inverse_horizon);
  CHECK(fig2.delta.resolve(10000) == 1e-4);
  CHECK(fig2.policies.size() == 5);
  CHECK(fig2.replications == 4000);

  const ExperimentConfig fig3 = parse_config(find_preset("fig3")->config);
  CHECK(fig3.sweep == SweepKind::horizon);
  CHECK(fig3.alphas == std::vector<double>{0.1});
  CHECK(fig3.horizons.back() == 100000);
  CHECK(fig3.horizons.front() == 100);
  CHECK(find_preset("fig4") == nullptr);
}

TEST_CASE("defaults and accepted forms") {
  const ExperimentConfig c = parse_config(minimal());
  CHECK(c.sweep == SweepKind::none);
  CHECK_FALSE(c.delta.inverse_horizon);
  CHECK(c.delta.value == 0.05);
  CHECK(c.environment.kind == EnvironmentKind::stochastic);
  CHECK(c.environment.noise == NoiseKind::gaussian);
  CHECK(c.environment.sigma == 1.0);
  CHECK(c.psi == PsiVariant::refined);

  auto doc = minimal();
  doc["n"] = 1e4;
  CHECK(parse_config(doc).horizons.front() == 10000);
  doc["delta"] = "1/n";
  CHECK(parse_config(doc).delta.inverse_horizon);
  doc["noise"] = "bernoulli";
  doc["psi"] = "simple";
  CHECK(parse_config(doc).psi == PsiVariant::simple);
}

TEST_CASE("errors name the offending field") {
  auto doc = minimal();
  doc["colour"] = "red";
  CHECK(field_of(doc) == "colour");
  for (const char* key : {"means", "alpha", "n", "delta", "policies", "replications", "seed_base"}) {
    auto d = minimal();
    d.erase(key);
    CHECK(field_of(d) == key);
  }
  const std::vector<std::pair<std::string, json>> bad = {
      {"means", {0.5}},
      {"means", {0.5, 1.4}},
      {"means", "0.5,0.6"},
      {"alpha", 0.0},
      {"alpha", 1.2},
      {"alpha", {0.3, 0.2}},
      {"n", 0},
      {"n", 10.5},
      {"delta", "1/t"},
      {"delta", 0.0},
      {"policies", {"cucb", "eps-greedy"}},
      {"policies", "cucb"},
      {"replications", 0},
      {"replications", 2.5},
      {"seed_base", -1},
      {"noise", "cauchy"},
      {"sigma", -1.0},
      {"psi", "kl"},
      {"environment", "markov"},
      {"expectation_mode", "yes"},
  };
  for (const auto& [key, value] : bad) {
    auto d = minimal();
    d[key] = value;
    CAPTURE(key);
    CAPTURE(value.dump());
    CHECK(field_of(d) == key);
  }

  auto both = minimal();
  both["alpha"] = {0.1, 0.2};
  both["n"] = {100, 200};
  CHECK(field_of(both) == "alpha");

  // Expectation mode needs alpha well above 1/n.
  auto em = minimal();
  em["expectation_mode"] = true;
  em["n"] = 100;
  em["alpha"] = 0.01;
  CHECK(field_of(em) == "alpha");
  em["alpha"] = 0.02;
  CHECK(field_of(em) == "none");

  CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("reward tables from config") {
  const auto path = std::filesystem::temp_directory_path() / "consbandit_table_test.csv";
  {
    std::ofstream f(path);
    f << "t,arm,reward\n";
    for (int t = 1; t <= 20; ++t) f << t << ",1,0.7\n" << t << ",2,0.2\n";
  }
  auto doc = minimal();
  doc["n"] = 20;
  doc["policies"] = {"safe-exp3ix"};
  doc["table"] = path.string();
  CHECK(field_of(doc) == "table");  // needs environment = adversarial
  doc["environment"] = "adversarial";
  const ExperimentConfig c = parse_config(doc);
  REQUIRE(c.environment.table);
  CHECK(c.environment.table->horizon() == 20);
  check_same(parse_config(emit_config(c)), c);

  doc["table"] = "/nonexistent/table.csv";
  CHECK(field_of(doc) == "table");
  std::filesystem::remove(path);
}

TEST_CASE("overrides") {
  auto doc = minimal();
  apply_override(doc, "replications=25");
  apply_override(doc, "noise=bernoulli");
  apply_override(doc, "alpha=[0.1,0.2]");
  apply_override(doc, "delta=1/n");
  const ExperimentConfig c = parse_config(doc);
  CHECK(c.replications == 25);
  CHECK(c.environment.noise == NoiseKind::bernoulli);
  CHECK(c.alphas == std::vector<double>{0.1, 0.2});
  CHECK(c.delta.inverse_horizon);
  CHECK_THROWS_AS(apply_override(doc, "colour=red"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "replications"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "=3"), ConfigError);
}

TEST_CASE("grids") {
  const auto g = parse_grid("0.05:1:0.05");
  REQUIRE(g.size() == 20);
  CHECK(g.front() == 0.05);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(parse_grid("0.1, 0.3,0.5") == std::vector<double>{0.1, 0.3, 0.5});
  CHECK(parse_grid("100:500:100") == std::vector<double>{100, 200, 300, 400, 500});
  CHECK(parse_grid("0.25") == std::vector<double>{0.25});
  CHECK_THROWS_AS(parse_grid("0.1:0.5"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:0:0.1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1:0"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0.1,,0.2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("a,b"), ConfigError);

  const auto d = default_alpha_grid();
  REQUIRE(d.size() == 21);
  CHECK(d.front() == 0.01);
  CHECK(d.back() == 1.0);
}
