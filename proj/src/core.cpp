#include "consbandit/core.hpp"

#include <cmath>

namespace consbandit {

ArmStats update_stats(ArmStats stats, double reward) {
  stats.pulls += 1;
  stats.reward_sum += reward;
  stats.empirical_mean = stats.reward_sum / static_cast<double>(stats.pulls);
  return stats;
}

void ProblemInstance::validate() const {
  if (means.size() < 2) {
    throw ConfigError("means", "need the default arm and at least one other arm");
  }
  for (Index i = 0; i < means.size(); ++i) {
    if (!(means(i) >= 0.0 && means(i) <= 1.0)) {
      throw ConfigError("means", "entry " + std::to_string(i) + " outside [0,1]");
    }
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta", "must lie in (0,1)");
  if (horizon < 1) throw ConfigError("n", "must be at least 1");
}

BudgetLedger update_budgets(BudgetLedger ledger, Round t, ArmIndex arm, double reward,
                            double default_reward, const ProblemInstance& instance) {
  if (t != ledger.round + 1) {
    throw std::invalid_argument("update_budgets: expected round " +
                                std::to_string(ledger.round + 1) + ", got " +
                                std::to_string(t));
  }
  if (arm < 0 || arm >= instance.num_arms()) {
    throw std::invalid_argument("update_budgets: arm index out of range");
  }
  const double keep = 1.0 - instance.alpha;

  ledger.default_reward_sum += default_reward;
  ledger.pre_play_budget =
      ledger.played_reward_sum.value() - keep * ledger.default_reward_sum.value();

  ledger.played_reward_sum += reward;
  ledger.played_mean_sum += instance.means(arm);
  ledger.round = t;

  ledger.true_budget =
      ledger.played_reward_sum.value() - keep * ledger.default_reward_sum.value();
  ledger.pseudo_budget =
      ledger.played_mean_sum.value() - keep * static_cast<double>(t) * instance.mu0();

  ledger.min_pseudo_budget = std::min(ledger.min_pseudo_budget, ledger.pseudo_budget);
  if (ledger.pseudo_budget < 0.0 && !ledger.first_violation_round) {
    ledger.first_violation_round = t;
  }
  return ledger;
}

CountArray count_pulls(const EpisodeTrace& trace, Index num_arms) {
  CountArray pulls = CountArray::Zero(num_arms);
  for (const auto& row : trace.rows) {
    if (row.arm < 0 || row.arm >= num_arms) {
      throw MalformedTrace("arm " + std::to_string(row.arm) + " at round " +
                           std::to_string(row.t) + " outside 0.." +
                           std::to_string(num_arms - 1));
    }
    ++pulls(row.arm);
  }
  return pulls;
}

double pseudo_regret(const EpisodeTrace& trace, const ProblemInstance& instance) {
  const CountArray pulls = count_pulls(trace, instance.num_arms());
  const Eigen::VectorXd gaps = instance.gaps();
  CompensatedSum acc;
  for (Index i = 0; i < gaps.size(); ++i) acc += static_cast<double>(pulls(i)) * gaps(i);
  return acc.value();
}

double pseudo_regret_by_rounds(const EpisodeTrace& trace, const ProblemInstance& instance) {
  count_pulls(trace, instance.num_arms());
  CompensatedSum played;
  for (const auto& row : trace.rows) played += instance.means(row.arm);
  return static_cast<double>(trace.rows.size()) * instance.best_mean() - played.value();
}

double realized_regret(const EpisodeTrace& trace, const Eigen::MatrixXd& rewards) {
  if (rewards.rows() != static_cast<Index>(trace.rows.size())) {
    throw std::invalid_argument("realized_regret: reward matrix has " +
                                std::to_string(rewards.rows()) + " rows, trace has " +
                                std::to_string(trace.rows.size()));
  }
  count_pulls(trace, rewards.cols());
  double best = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < rewards.cols(); ++i) {
    CompensatedSum column;
    for (Index t = 0; t < rewards.rows(); ++t) column += rewards(t, i);
    best = std::max(best, column.value());
  }
  CompensatedSum collected;
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    collected += rewards(static_cast<Index>(t), trace.rows[t].arm);
  }
  return best - collected.value();
}

double realized_regret(const EpisodeTrace& trace) {
  CompensatedSum collected;
  for (const auto& row : trace.rows) collected += row.reward;
  return trace.reward_totals.maxCoeff() - collected.value();
}

}  // namespace consbandit
