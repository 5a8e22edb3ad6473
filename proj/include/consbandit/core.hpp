#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace consbandit {

using Index = Eigen::Index;
using Round = std::int64_t;
using ArmIndex = Index;
using CountArray = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;

// Arm 0 is always the default (conservative) arm.
inline constexpr ArmIndex kDefaultArm = 0;

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class MalformedTrace : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MalformedEnvironment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated running sum. The result depends only on the order
/// of the added terms, which keeps aggregates reproducible.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

template <typename Range>
double compensated_sum(const Range& values) {
  CompensatedSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

struct ArmStats {
  std::int64_t pulls = 0;
  double reward_sum = 0.0;
  // Zero until the arm has been pulled once.
  double empirical_mean = 0.0;
};

ArmStats update_stats(ArmStats stats, double reward);

/// Means, constraint fraction, confidence level and horizon of one bandit
/// problem. means(0) is the default arm's mean mu_0.
struct ProblemInstance {
  Eigen::VectorXd means;
  double alpha = 0.1;
  double delta = 0.1;
  Round horizon = 1;

  Index num_exploratory() const { return means.size() - 1; }
  Index num_arms() const { return means.size(); }
  double mu0() const { return means(0); }
  double best_mean() const { return means.maxCoeff(); }
  Eigen::VectorXd gaps() const {
    return (Eigen::VectorXd::Constant(means.size(), best_mean()) - means).eval();
  }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

/// Running budgets of one episode.
///   true_budget     Z_t  = sum X_{s,I_s} - (1 - alpha) sum X_{s,0}
///   pseudo_budget   Z~_t = sum mu_{I_s} - (1 - alpha) t mu_0
///   pre_play_budget Z'_t = sum_{s<t} X_{s,I_s} - (1 - alpha) sum_{s<=t} X_{s,0}
/// min_pseudo_budget is taken over rounds s >= 1 (+inf before the first).
struct BudgetLedger {
  Round round = 0;
  double true_budget = 0.0;
  double pseudo_budget = 0.0;
  double pre_play_budget = 0.0;
  double min_pseudo_budget = std::numeric_limits<double>::infinity();
  std::optional<Round> first_violation_round;

  CompensatedSum played_reward_sum;
  CompensatedSum played_mean_sum;
  CompensatedSum default_reward_sum;
};

/// Advances both budgets by round t. default_reward is X_{t,0}, which the
/// simulator knows even when the learner does not.
BudgetLedger update_budgets(BudgetLedger ledger, Round t, ArmIndex arm, double reward,
                            double default_reward, const ProblemInstance& instance);

struct TraceRow {
  Round t = 0;
  ArmIndex arm = 0;
  std::optional<ArmIndex> proposed;
  double reward = 0.0;
  double pseudo_budget = 0.0;
  double true_budget = 0.0;
  bool safe_mode = false;
};

struct EpisodeTrace {
  std::vector<TraceRow> rows;
  CountArray pulls;
  // Column sums of the full reward matrix, i.e. sum_t X_{t,i} for every arm.
  Eigen::VectorXd reward_totals;
  // Full n x (K+1) reward matrix, only when requested.
  std::optional<Eigen::MatrixXd> rewards;
  BudgetLedger ledger;
  double pseudo_regret = 0.0;
  double realized_regret = 0.0;
};

/// Per-arm pull counts recounted from the trace rows.
CountArray count_pulls(const EpisodeTrace& trace, Index num_arms);

/// sum_i T_i(n) Delta_i.
double pseudo_regret(const EpisodeTrace& trace, const ProblemInstance& instance);
/// n mu^* - sum_t mu_{I_t}; equal to pseudo_regret up to rounding.
double pseudo_regret_by_rounds(const EpisodeTrace& trace, const ProblemInstance& instance);

/// max_i sum_t X_{t,i} - sum_t X_{t,I_t}, using an n x (K+1) reward matrix.
double realized_regret(const EpisodeTrace& trace, const Eigen::MatrixXd& rewards);
/// Same quantity from the column sums stored in the trace.
double realized_regret(const EpisodeTrace& trace);

}  // namespace consbandit
