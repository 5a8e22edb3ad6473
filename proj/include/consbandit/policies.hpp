#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "consbandit/confidence.hpp"
#include "consbandit/core.hpp"

namespace consbandit {

/// What a policy decided in one round.
struct Decision {
  ArmIndex arm = kDefaultArm;
  // Arm the underlying learner wanted (J_t), when the policy has one.
  std::optional<ArmIndex> proposed;
  // True when a budget check overrode the proposal.
  bool safe_mode = false;
  // xi_t, xi'_t or Z'_t, NaN for unconstrained policies.
  double budget_bound = std::numeric_limits<double>::quiet_NaN();
};

/// Uniform select/observe contract. observe() is called exactly once per
/// round, with the arm returned by the preceding select().
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual Index num_arms() const = 0;
  virtual Decision select(Round t) = 0;
  virtual void observe(Round t, ArmIndex arm, double reward) = 0;
};

inline constexpr std::array<std::string_view, 8> kPolicyRoster = {
    "ucb",       "cucb",        "cucb-unknown-mu0", "cucb-alt",
    "budgetfirst", "unbalanced-moss", "exp3ix",     "safe-exp3ix"};

bool is_known_policy(std::string_view name);
bool is_adversarial_policy(std::string_view name);

// ---------------------------------------------------------------------------
// Free functions over per-arm arrays.

/// Lowest index attaining the maximum.
ArmIndex argmax_lowest(const Eigen::ArrayXd& values);

/// Lower confidence bound on the budget after playing `proposed` in round t
/// with known mu_0:
///   sum_i T_i(t-1) lambda_i + lambda_J - (1 - alpha) t mu_0,
/// where lower(0) == mu_0.
double budget_bound_known_mu0(const CountArray& pulls, const Eigen::ArrayXd& lower,
                              ArmIndex proposed, Round t, double alpha, double mu0);

/// Unknown-mu_0 variant:
///   sum_{i>=1} T_i(t-1) lambda_i + lambda_J + (T_0(t-1) - (1 - alpha) t) theta_0.
/// An infinite theta_0 makes the bound -inf whenever its coefficient is
/// negative; a zero coefficient contributes nothing.
double budget_bound_unknown_mu0(const CountArray& pulls, const Eigen::ArrayXd& lower,
                                double upper_default, ArmIndex proposed, Round t,
                                double alpha);

/// Worst-case regret used to size BudgetFirst's default prefix:
/// 2 sqrt(n K psi(n)) + K.
double budgetfirst_worst_regret(Round horizon, const ConfidenceSchedule& schedule);
/// ceil(worst_regret / (alpha mu_0)), capped at the horizon.
Round budgetfirst_t0(double worst_regret, double alpha, double mu0, Round horizon);
Round budgetfirst_t0(const ProblemInstance& instance, const ConfidenceSchedule& schedule);

/// (B_0, B_1, ..., B_K) with B_i = sqrt(nK) + K/(alpha mu_0) and B_0 = nK / B_i.
Eigen::VectorXd umoss_budget_vector(Round horizon, Index num_exploratory, double alpha,
                                    double mu0);
Eigen::VectorXd umoss_budget_vector(const ProblemInstance& instance);
/// mean + sqrt((2/T) log+(n^2 / (B^2 T))); +inf when T == 0.
double umoss_index(double mean, std::int64_t pulls, Round horizon, double budget);

/// 7 sqrt(K t log K) log(4 t^2 / delta).
double admissible_bound(Round t, Index num_exploratory, double delta);

struct ExpectationParams {
  double delta = 0.0;
  double alpha = 0.0;
};
/// delta' = 1/n and alpha' = (alpha - delta') / (1 - delta').
ExpectationParams expectation_mode_params(double alpha, Round horizon);

// Implicit-exploration helpers.
inline double ix_gamma(Round t, Index num_arms) {
  return std::sqrt(std::log(static_cast<double>(num_arms)) /
                   (4.0 * static_cast<double>(num_arms) * static_cast<double>(t)));
}
inline double ix_loss_estimate(double loss, double probability, double gamma) {
  return loss / (probability + gamma);
}
/// Exponential weights exp(-eta L_i), normalised.
Eigen::ArrayXd exp3ix_distribution(const Eigen::ArrayXd& loss_estimates, double eta);

// ---------------------------------------------------------------------------
// Policies.

/// Shared state of the index policies: per-arm statistics and cached radii.
class IndexPolicy : public Policy {
 public:
  IndexPolicy(Index num_exploratory, ConfidenceSchedule schedule, std::optional<double> known_mu0);

  Index num_arms() const override { return static_cast<Index>(stats_.size()); }
  void observe(Round t, ArmIndex arm, double reward) override;

  const std::vector<ArmStats>& stats() const { return stats_; }
  const ConfidenceSchedule& schedule() const { return schedule_; }
  std::optional<double> known_mu0() const { return known_mu0_; }
  CountArray pulls() const;

  /// theta_i(t): empirical mean plus radius; mu_0 for the default arm when known.
  Eigen::ArrayXd upper_bounds() const;
  /// lambda_i(t): max(0, empirical mean minus radius); mu_0 when known.
  Eigen::ArrayXd lower_bounds() const;

 protected:
  std::vector<ArmStats> stats_;
  ConfidenceSchedule schedule_;
  std::optional<double> known_mu0_;
  Eigen::ArrayXd radii_;
};

class Ucb : public IndexPolicy {
 public:
  Ucb(Index num_exploratory, ConfidenceSchedule schedule, std::optional<double> known_mu0);
  std::string_view name() const override { return "ucb"; }
  Decision select(Round t) override;
};

enum class FallbackRule {
  default_arm,    // play arm 0 when the budget bound is negative
  lower_bound,    // play argmax_i lambda_i instead
};

class ConservativeUcb : public IndexPolicy {
 public:
  /// known_mu0 empty selects the unknown-mu_0 budget bound.
  ConservativeUcb(Index num_exploratory, ConfidenceSchedule schedule, double alpha,
                  std::optional<double> known_mu0, FallbackRule fallback = FallbackRule::default_arm);

  std::string_view name() const override;
  Decision select(Round t) override;

  /// Budget lower bound for proposing J in round t, given the current state.
  double budget_bound(Round t, ArmIndex proposed) const;

  double alpha() const { return alpha_; }
  std::optional<ArmIndex> last_proposed() const { return last_proposed_; }
  double last_budget_bound() const { return last_xi_; }

 private:
  double alpha_;
  FallbackRule fallback_;
  std::optional<ArmIndex> last_proposed_;
  double last_xi_ = std::numeric_limits<double>::quiet_NaN();
};

/// Plays the default arm for the first t0 rounds, then UCB with known mu_0.
class BudgetFirst : public IndexPolicy {
 public:
  BudgetFirst(Index num_exploratory, ConfidenceSchedule schedule, double mu0, Round t0);
  std::string_view name() const override { return "budgetfirst"; }
  Decision select(Round t) override;
  Round t0() const { return t0_; }

 private:
  Round t0_;
};

class UnbalancedMoss : public IndexPolicy {
 public:
  UnbalancedMoss(Index num_exploratory, ConfidenceSchedule schedule, Round horizon,
                 Eigen::VectorXd budgets);
  std::string_view name() const override { return "unbalanced-moss"; }
  Decision select(Round t) override;
  const Eigen::VectorXd& budgets() const { return budgets_; }

 private:
  Round horizon_;
  Eigen::VectorXd budgets_;
};

/// EXP3 with implicit exploration over all K+1 arms, anytime schedule
/// gamma_t = sqrt(log(K+1) / (4 (K+1) t)), eta_t = 2 gamma_t. Works on
/// losses 1 - reward.
class Exp3Ix : public Policy {
 public:
  Exp3Ix(Index num_exploratory, std::uint64_t seed);

  std::string_view name() const override { return "exp3ix"; }
  Index num_arms() const override { return loss_estimates_.size(); }
  Decision select(Round t) override;
  void observe(Round t, ArmIndex arm, double reward) override;

  const Eigen::ArrayXd& loss_estimates() const { return loss_estimates_; }
  /// Distribution used by the most recent select().
  const Eigen::ArrayXd& probabilities() const { return probabilities_; }

 private:
  Eigen::ArrayXd loss_estimates_;
  Eigen::ArrayXd probabilities_;
  double gamma_ = 0.0;
  std::mt19937_64 rng_;
};

/// Defers to a base learner only while the realized budget lower bound
/// Z'_t = sum_{s<t} X_{s,I_s} - (1 - alpha) mu_0 t is nonnegative. The base
/// runs on its own clock: rounds played safe are invisible to it.
class SafePlayWrapper : public Policy {
 public:
  SafePlayWrapper(std::unique_ptr<Policy> base, double alpha, double mu0);

  std::string_view name() const override { return name_; }
  Index num_arms() const override { return base_->num_arms(); }
  Decision select(Round t) override;
  void observe(Round t, ArmIndex arm, double reward) override;

  Round base_rounds() const { return base_clock_; }
  const Policy& base() const { return *base_; }

 private:
  std::unique_ptr<Policy> base_;
  std::string name_;
  double alpha_;
  double mu0_;
  CompensatedSum collected_;
  CompensatedSum default_total_;
  Round base_clock_ = 0;
  bool delegated_ = false;
};

// ---------------------------------------------------------------------------

struct PolicyParams {
  Index num_exploratory = 1;
  double mu0 = 0.5;
  double alpha = 0.1;
  double delta = 0.1;
  Round horizon = 1;
  PsiVariant psi = PsiVariant::refined;
};

PolicyParams policy_params(const ProblemInstance& instance, PsiVariant psi);

/// Builds a roster policy. seed feeds randomized policies only.
std::unique_ptr<Policy> make_policy(std::string_view name, const PolicyParams& params,
                                    std::uint64_t seed);

}  // namespace consbandit
