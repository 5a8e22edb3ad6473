#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "consbandit/confidence.hpp"
#include "consbandit/core.hpp"
#include "consbandit/environments.hpp"
#include "consbandit/policies.hpp"

namespace consbandit {

// -- environments as configured ----------------------------------------------

enum class EnvironmentKind { stochastic, adversarial };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::stochastic;
  NoiseKind noise = NoiseKind::gaussian;
  double sigma = 1.0;
  // Builtin adversary name, used when no table is given.
  std::string adversary = "constant";
  std::string table_path;
  std::shared_ptr<const RewardTable> table;
};

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec,
                                              const ProblemInstance& instance,
                                              std::uint64_t seed);

// -- episodes -----------------------------------------------------------------

struct EpisodeOptions {
  bool retain_reward_matrix = false;
};

/// n rounds of select -> reward -> observe -> budget update.
EpisodeTrace run_episode(Policy& policy, const Environment& env,
                         const ProblemInstance& instance, const EpisodeOptions& options = {});

/// Builds the policy and environment from the replication seed's substreams.
/// In expectation mode the policy runs with (delta', alpha') while the
/// budgets keep the instance's alpha.
EpisodeTrace run_episode(std::string_view policy, const EnvironmentSpec& env,
                         const ProblemInstance& instance, std::uint64_t seed,
                         PsiVariant psi = PsiVariant::refined, bool expectation_mode = false,
                         const EpisodeOptions& options = {});

// -- audits -------------------------------------------------------------------

enum class AuditMode { pseudo, realized };

struct ConstraintAudit {
  bool violated = false;
  std::optional<Round> first_violation;
  // Includes the t = 0 baseline of zero.
  double min_budget = 0.0;
};

ConstraintAudit audit_constraint(const EpisodeTrace& trace, const ProblemInstance& instance,
                                 AuditMode mode);

struct PullAuditEntry {
  ArmIndex arm = 0;
  std::int64_t pulls = 0;
  double bound = 0.0;
  bool ok = true;
};

/// T_i(n) <= 4L / Delta_i^2 + 1 for every suboptimal exploratory arm,
/// L = psi(n). Arms with zero gap are skipped.
std::vector<PullAuditEntry> audit_pull_bound(const EpisodeTrace& trace,
                                             const ProblemInstance& instance,
                                             const ConfidenceSchedule& schedule);

/// Whether every confidence interval of arms first_arm..K contained the
/// true mean after every pull of the episode.
bool audit_coverage(const EpisodeTrace& trace, const ProblemInstance& instance,
                    const ConfidenceSchedule& schedule, ArmIndex first_arm = 1);

/// Last t with alpha mu_0 t <= admissible_bound(t) + mu_0. Doubling then
/// bisection; the gap function is convex so the feasible set is a prefix.
Round adversarial_t0(Index num_exploratory, double alpha, double mu0, double delta,
                     Round cap = Round{1} << 53);

struct AdversarialAudit {
  double regret = 0.0;
  Round t0 = 0;
  double bound = 0.0;
  bool ok = false;
};

AdversarialAudit audit_adversarial_regret(const EpisodeTrace& trace, Index num_exploratory,
                                          double alpha, double mu0, double delta);
AdversarialAudit audit_adversarial_regret(const EpisodeTrace& trace,
                                          const Eigen::MatrixXd& rewards,
                                          Index num_exploratory, double alpha, double mu0,
                                          double delta);

struct LowerBound {
  double value = 0.0;
  double small_alpha_term = 0.0;  // K / ((16e + 8) alpha mu_0)
  double minimax_term = 0.0;      // sqrt(Kn) / sqrt(16e + 8)
  bool valid = false;
};

/// Worst-case lower bound on expected regret, and whether its precondition
/// min{mu_0, 1 - mu_0} >= max{1/(2 sqrt(alpha)), sqrt(e + 1/2)} sqrt(K/n) holds.
LowerBound lower_bound_B(Index num_exploratory, Round horizon, double alpha, double mu0);

// -- Monte Carlo --------------------------------------------------------------

enum class SweepKind { none, alpha, horizon };

std::string_view to_string(SweepKind sweep);

/// delta given either as a number or symbolically as 1/n.
struct DeltaSpec {
  bool inverse_horizon = true;
  double value = 0.0;

  double resolve(Round horizon) const {
    return inverse_horizon ? 1.0 / static_cast<double>(horizon) : value;
  }
};

struct ExperimentConfig {
  Eigen::VectorXd means;
  std::vector<double> alphas{0.1};
  std::vector<Round> horizons{10000};
  SweepKind sweep = SweepKind::none;
  DeltaSpec delta;
  std::vector<std::string> policies;
  Index replications = 1000;
  std::uint64_t seed_base = 0;
  EnvironmentSpec environment;
  PsiVariant psi = PsiVariant::refined;
  bool expectation_mode = false;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct SweepPoint {
  double alpha = 0.0;
  Round horizon = 0;
  double delta = 0.0;
  double sweep_value = 0.0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

struct RunRecord {
  std::string policy;
  double alpha = 0.0;
  Round horizon = 0;
  double delta = 0.0;
  Index replication = 0;
  std::uint64_t seed = 0;
  double pseudo_regret = 0.0;
  double realized_regret = 0.0;
  double min_pseudo_budget = 0.0;
  bool violated = false;
  std::optional<Round> first_violation_round;
  CountArray pulls;
};

struct SummaryRow {
  std::string policy;
  SweepKind sweep = SweepKind::none;
  double sweep_value = 0.0;
  double alpha = 0.0;
  Round horizon = 0;
  Index replications = 0;
  double mean_pseudo_regret = 0.0;
  double stderr_pseudo_regret = 0.0;
  double mean_realized_regret = 0.0;
  double violation_rate = 0.0;
  double mean_min_budget = 0.0;
  Eigen::VectorXd mean_pulls;
};

/// Per-round mean and standard error of the pseudo budget across replications.
struct RoundProfile {
  std::string policy;
  double sweep_value = 0.0;
  Eigen::VectorXd mean_budget;
  Eigen::VectorXd stderr_budget;
};

struct MonteCarloOptions {
  unsigned threads = 1;
  bool round_profiles = false;
};

struct MonteCarloResult {
  // Ordered by (sweep point, policy, replication).
  std::vector<RunRecord> runs;
  // Ordered by (sweep point, policy).
  std::vector<SummaryRow> summary;
  std::vector<RoundProfile> profiles;
};

/// Worker count from CONSBANDIT_THREADS, else the hardware concurrency.
unsigned default_thread_count();

MonteCarloResult monte_carlo(const ExperimentConfig& config,
                             const MonteCarloOptions& options = {});

/// Mean and standard error (sample stddev / sqrt(N)) of an ordered sample.
std::pair<double, double> mean_and_stderr(const std::vector<double>& values);

// -- CSV ----------------------------------------------------------------------

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs, Index num_arms);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);

}  // namespace consbandit
