#include "consbandit/environments.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace consbandit {

double counter_uniform(std::uint64_t seed, Round t, ArmIndex arm, std::uint64_t lane) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(t));
  h = splitmix64(h ^ ((static_cast<std::uint64_t>(arm) << 8) | lane));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string_view to_string(NoiseKind noise) {
  return noise == NoiseKind::gaussian ? "gaussian" : "bernoulli";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "bernoulli") return NoiseKind::bernoulli;
  throw ConfigError("noise", "expected \"gaussian\" or \"bernoulli\", got \"" +
                                 std::string(name) + "\"");
}

// -- StochasticEnv ------------------------------------------------------------

StochasticEnv::StochasticEnv(Eigen::VectorXd means, NoiseKind noise, double sigma,
                             std::uint64_t seed)
    : means_(std::move(means)), noise_(noise), sigma_(sigma), seed_(seed) {
  if (!(sigma_ >= 0.0)) throw ConfigError("sigma", "must be nonnegative");
}

double StochasticEnv::reward(Round t, ArmIndex arm) const {
  const double mean = means_(arm);
  if (noise_ == NoiseKind::bernoulli) {
    return counter_uniform(seed_, t, arm, 0) < mean ? 1.0 : 0.0;
  }
  if (sigma_ == 0.0) return mean;
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - counter_uniform(seed_, t, arm, 0);
  const double u2 = counter_uniform(seed_, t, arm, 1);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma_ * z;
}

// -- reward tables ------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

RewardTable read_reward_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,arm,reward") {
    throw MalformedEnvironment("reward table: expected header \"t,arm,reward\"");
  }
  std::vector<std::tuple<Round, Index, double>> cells;
  Round max_t = 0;
  Index max_arm = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw MalformedEnvironment("reward table line " + std::to_string(line_no) +
                                 ": expected three fields");
    }
    Round t = 0;
    Index arm = 0;
    double reward = 0.0;
    try {
      t = std::stoll(a);
      arm = std::stoll(b);
      reward = std::stod(c);
    } catch (const std::exception&) {
      throw MalformedEnvironment("reward table line " + std::to_string(line_no) +
                                 ": unparsable field");
    }
    if (t < 1 || arm < 1) {
      throw MalformedEnvironment("reward table line " + std::to_string(line_no) +
                                 ": rounds are 1-based and arms start at 1");
    }
    cells.emplace_back(t, arm, reward);
    max_t = std::max(max_t, t);
    max_arm = std::max(max_arm, arm);
  }
  if (cells.empty()) throw MalformedEnvironment("reward table: no rows");

  RewardTable table;
  table.rewards = Eigen::MatrixXd::Constant(max_t, max_arm,
                                            std::numeric_limits<double>::quiet_NaN());
  for (auto [t, arm, reward] : cells) {
    double& cell = table.rewards(t - 1, arm - 1);
    if (!std::isnan(cell)) {
      throw MalformedEnvironment("reward table: duplicate entry for t=" + std::to_string(t) +
                                 ", arm=" + std::to_string(arm));
    }
    if (!(reward >= 0.0 && reward <= 1.0)) {
      ++table.clamped;
      reward = std::isnan(reward) ? 0.0 : std::clamp(reward, 0.0, 1.0);
    }
    cell = reward;
  }
  if (table.clamped > 0) {
    std::cerr << "warning: reward table had " << table.clamped
              << " entries outside [0,1]; clamped\n";
  }
  return table;
}

RewardTable read_reward_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedEnvironment("cannot open reward table " + path);
  return read_reward_table(in);
}

// -- AdversarialEnv -----------------------------------------------------------

bool is_builtin_adversary(std::string_view name) {
  return name == "constant" || name == "drift" || name == "stochastic-disguise";
}

AdversarialEnv AdversarialEnv::builtin(std::string_view name, double mu0,
                                       Eigen::VectorXd exploratory_rewards, Round horizon,
                                       std::uint64_t seed) {
  AdversarialEnv env;
  if (name == "constant") {
    env.generator_ = Generator::constant;
  } else if (name == "drift") {
    env.generator_ = Generator::drift;
  } else if (name == "stochastic-disguise") {
    env.generator_ = Generator::stochastic_disguise;
  } else {
    throw ConfigError("adversary", "unknown adversary \"" + std::string(name) + "\"");
  }
  if (!(mu0 >= 0.0 && mu0 <= 1.0)) throw ConfigError("means", "mu_0 outside [0,1]");
  if ((exploratory_rewards.array() < 0.0).any() || (exploratory_rewards.array() > 1.0).any()) {
    throw ConfigError("means", "adversarial rewards must lie in [0,1]");
  }
  env.mu0_ = mu0;
  env.rewards_ = std::move(exploratory_rewards);
  env.horizon_ = horizon;
  env.seed_ = seed;
  return env;
}

AdversarialEnv AdversarialEnv::from_table(double mu0, RewardTable table) {
  AdversarialEnv env;
  env.generator_ = Generator::table;
  if (!(mu0 >= 0.0 && mu0 <= 1.0)) throw ConfigError("means", "mu_0 outside [0,1]");
  env.mu0_ = mu0;
  env.rewards_ = Eigen::VectorXd::Zero(table.num_exploratory());
  env.horizon_ = table.horizon();
  env.table_ = std::make_shared<const RewardTable>(std::move(table));
  return env;
}

double AdversarialEnv::reward(Round t, ArmIndex arm) const {
  if (arm == kDefaultArm) return mu0_;
  const Index k = rewards_.size();
  const Index i = arm - 1;
  switch (generator_) {
    case Generator::constant:
      return rewards_(i);
    case Generator::drift:
      return 2 * t <= horizon_ ? rewards_(i) : rewards_(k - 1 - i);
    case Generator::stochastic_disguise:
      return counter_uniform(seed_, t, arm) < rewards_(i) ? 1.0 : 0.0;
    case Generator::table: {
      if (t < 1 || t > table_->horizon()) {
        throw MalformedEnvironment("reward table has no row for round " + std::to_string(t));
      }
      const double x = table_->rewards(t - 1, i);
      if (std::isnan(x)) {
        throw MalformedEnvironment("reward table missing t=" + std::to_string(t) +
                                   ", arm=" + std::to_string(arm));
      }
      return x;
    }
  }
  return 0.0;
}

}  // namespace consbandit
