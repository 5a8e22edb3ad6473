#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "consbandit/core.hpp"

namespace consbandit {

// -- seeding ------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent substreams of one replication seed.
enum class StreamPurpose : std::uint64_t {
  environment = 0x656E76ULL,
  policy = 0x706F6CULL,
};

inline std::uint64_t replication_seed(std::uint64_t seed_base, std::uint64_t replication) {
  return seed_base ^ replication;
}

inline std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(purpose));
}

/// Uniform double in [0,1) that depends only on (seed, t, arm, lane).
double counter_uniform(std::uint64_t seed, Round t, ArmIndex arm, std::uint64_t lane = 0);

// -- environments -------------------------------------------------------------

/// Oblivious reward generator: X_{t,i} is a pure function of (t, i) once the
/// environment is constructed.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Index num_arms() const = 0;
  virtual double reward(Round t, ArmIndex arm) const = 0;

  /// Fills row with X_{t,0..K}.
  void draw_round(Round t, Eigen::Ref<Eigen::VectorXd> row) const {
    for (Index i = 0; i < row.size(); ++i) row(i) = reward(t, i);
  }
};

enum class NoiseKind { gaussian, bernoulli };

std::string_view to_string(NoiseKind noise);
NoiseKind parse_noise_kind(std::string_view name);

/// X_{t,i} = mu_i + eta_{t,i}, independent across rounds and arms.
class StochasticEnv : public Environment {
 public:
  StochasticEnv(Eigen::VectorXd means, NoiseKind noise, double sigma, std::uint64_t seed);

  Index num_arms() const override { return means_.size(); }
  double reward(Round t, ArmIndex arm) const override;
  const Eigen::VectorXd& means() const { return means_; }

 private:
  Eigen::VectorXd means_;
  NoiseKind noise_;
  double sigma_;
  std::uint64_t seed_;
};

/// n x K rewards for arms 1..K, loaded from CSV "t,arm,reward". Missing
/// cells are NaN and raise MalformedEnvironment on lookup.
struct RewardTable {
  Eigen::MatrixXd rewards;
  Index clamped = 0;

  Index num_exploratory() const { return rewards.cols(); }
  Round horizon() const { return rewards.rows(); }
};

RewardTable read_reward_table(std::istream& in);
RewardTable read_reward_table_file(const std::string& path);

/// Rewards in [0,1], X_{t,0} = mu_0 exactly.
class AdversarialEnv : public Environment {
 public:
  enum class Generator { constant, drift, stochastic_disguise, table };

  /// "constant" fixed per-arm rewards; "drift" reverses the order of arms
  /// 1..K after horizon/2; "stochastic-disguise" i.i.d. Bernoulli draws.
  static AdversarialEnv builtin(std::string_view name, double mu0,
                                Eigen::VectorXd exploratory_rewards, Round horizon,
                                std::uint64_t seed);
  static AdversarialEnv from_table(double mu0, RewardTable table);

  Index num_arms() const override { return rewards_.size() + 1; }
  double reward(Round t, ArmIndex arm) const override;
  double mu0() const { return mu0_; }
  Generator generator() const { return generator_; }

 private:
  AdversarialEnv() = default;

  Generator generator_ = Generator::constant;
  double mu0_ = 0.0;
  Eigen::VectorXd rewards_;
  Round horizon_ = 0;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const RewardTable> table_;
};

bool is_builtin_adversary(std::string_view name);

}  // namespace consbandit
