#include "consbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace consbandit {

// -- environments -------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec,
                                              const ProblemInstance& instance,
                                              std::uint64_t seed) {
  const std::uint64_t env_seed = derive_seed(seed, StreamPurpose::environment);
  if (spec.kind == EnvironmentKind::stochastic) {
    return std::make_unique<StochasticEnv>(instance.means, spec.noise, spec.sigma, env_seed);
  }
  const Index k = instance.num_exploratory();
  if (spec.table) {
    if (spec.table->num_exploratory() != k) {
      throw ConfigError("table", "reward table has " +
                                     std::to_string(spec.table->num_exploratory()) +
                                     " arms, config has " + std::to_string(k));
    }
    if (spec.table->horizon() < instance.horizon) {
      throw ConfigError("table", "reward table covers " +
                                     std::to_string(spec.table->horizon()) +
                                     " rounds, horizon is " + std::to_string(instance.horizon));
    }
    return std::make_unique<AdversarialEnv>(AdversarialEnv::from_table(instance.mu0(), *spec.table));
  }
  return std::make_unique<AdversarialEnv>(AdversarialEnv::builtin(
      spec.adversary, instance.mu0(), instance.means.tail(k), instance.horizon, env_seed));
}

// -- episodes -----------------------------------------------------------------

EpisodeTrace run_episode(Policy& policy, const Environment& env,
                         const ProblemInstance& instance, const EpisodeOptions& options) {
  const Index arms = instance.num_arms();
  if (policy.num_arms() != arms || env.num_arms() != arms) {
    throw std::invalid_argument("run_episode: arm-count mismatch (policy " +
                                std::to_string(policy.num_arms()) + ", environment " +
                                std::to_string(env.num_arms()) + ", instance " +
                                std::to_string(arms) + ")");
  }
  const Round n = instance.horizon;

  EpisodeTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(n));
  if (options.retain_reward_matrix) trace.rewards = Eigen::MatrixXd(n, arms);
  std::vector<CompensatedSum> totals(static_cast<std::size_t>(arms));
  Eigen::VectorXd row(arms);

  for (Round t = 1; t <= n; ++t) {
    const Decision d = policy.select(t);
    env.draw_round(t, row);
    const double x = row(d.arm);
    policy.observe(t, d.arm, x);
    trace.ledger = update_budgets(std::move(trace.ledger), t, d.arm, x, row(0), instance);

    for (Index i = 0; i < arms; ++i) totals[static_cast<std::size_t>(i)] += row(i);
    if (trace.rewards) trace.rewards->row(t - 1) = row.transpose();

    trace.rows.push_back(TraceRow{t, d.arm, d.proposed, x, trace.ledger.pseudo_budget,
                                  trace.ledger.true_budget, d.safe_mode});
  }

  trace.reward_totals.resize(arms);
  for (Index i = 0; i < arms; ++i) trace.reward_totals(i) = totals[static_cast<std::size_t>(i)].value();
  trace.pulls = count_pulls(trace, arms);
  trace.pseudo_regret = pseudo_regret(trace, instance);
  trace.realized_regret = realized_regret(trace);
  return trace;
}

EpisodeTrace run_episode(std::string_view policy, const EnvironmentSpec& env,
                         const ProblemInstance& instance, std::uint64_t seed, PsiVariant psi,
                         bool expectation_mode, const EpisodeOptions& options) {
  PolicyParams params = policy_params(instance, psi);
  if (expectation_mode) {
    const ExpectationParams adjusted = expectation_mode_params(instance.alpha, instance.horizon);
    params.alpha = adjusted.alpha;
    params.delta = adjusted.delta;
  }
  auto learner = make_policy(policy, params, derive_seed(seed, StreamPurpose::policy));
  auto environment = make_environment(env, instance, seed);
  return run_episode(*learner, *environment, instance, options);
}

// -- audits -------------------------------------------------------------------

ConstraintAudit audit_constraint(const EpisodeTrace& trace, const ProblemInstance& /*instance*/,
                                 AuditMode mode) {
  ConstraintAudit audit;
  for (const auto& row : trace.rows) {
    const double budget = mode == AuditMode::pseudo ? row.pseudo_budget : row.true_budget;
    audit.min_budget = std::min(audit.min_budget, budget);
    if (budget < 0.0 && !audit.violated) {
      audit.violated = true;
      audit.first_violation = row.t;
    }
  }
  return audit;
}

std::vector<PullAuditEntry> audit_pull_bound(const EpisodeTrace& trace,
                                             const ProblemInstance& instance,
                                             const ConfidenceSchedule& schedule) {
  const CountArray pulls = count_pulls(trace, instance.num_arms());
  const Eigen::VectorXd gaps = instance.gaps();
  const double L = schedule.psi(static_cast<std::int64_t>(trace.rows.size()));
  std::vector<PullAuditEntry> entries;
  for (Index i = 1; i < instance.num_arms(); ++i) {
    if (!(gaps(i) > 0.0)) continue;
    PullAuditEntry e;
    e.arm = i;
    e.pulls = pulls(i);
    e.bound = 4.0 * L / (gaps(i) * gaps(i)) + 1.0;
    e.ok = static_cast<double>(e.pulls) <= e.bound;
    entries.push_back(e);
  }
  return entries;
}

bool audit_coverage(const EpisodeTrace& trace, const ProblemInstance& instance,
                    const ConfidenceSchedule& schedule, ArmIndex first_arm) {
  std::vector<ArmStats> stats(static_cast<std::size_t>(instance.num_arms()));
  for (const auto& row : trace.rows) {
    if (row.arm < first_arm) continue;
    auto& s = stats[static_cast<std::size_t>(row.arm)];
    s = update_stats(s, row.reward);
    if (std::abs(s.empirical_mean - instance.means(row.arm)) > radius(s, schedule)) return false;
  }
  return true;
}

Round adversarial_t0(Index num_exploratory, double alpha, double mu0, double delta, Round cap) {
  const auto feasible = [&](Round t) {
    return alpha * mu0 * static_cast<double>(t) <=
           admissible_bound(t, num_exploratory, delta) + mu0;
  };
  if (!feasible(1)) return 0;
  Round lo = 1;
  Round hi = 2;
  while (feasible(hi)) {
    lo = hi;
    if (hi > cap / 2) {
      throw std::overflow_error("adversarial_t0: crossing beyond " + std::to_string(cap));
    }
    hi *= 2;
  }
  while (hi - lo > 1) {
    const Round mid = lo + (hi - lo) / 2;
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace {

AdversarialAudit finish_adversarial_audit(double regret, Round horizon, Index num_exploratory,
                                          double alpha, double mu0, double delta) {
  AdversarialAudit audit;
  audit.regret = regret;
  audit.t0 = adversarial_t0(num_exploratory, alpha, mu0, delta);
  audit.bound = static_cast<double>(audit.t0) + admissible_bound(horizon, num_exploratory, delta);
  audit.ok = audit.regret <= audit.bound;
  return audit;
}

}  // namespace

AdversarialAudit audit_adversarial_regret(const EpisodeTrace& trace, Index num_exploratory,
                                          double alpha, double mu0, double delta) {
  return finish_adversarial_audit(realized_regret(trace), static_cast<Round>(trace.rows.size()),
                                  num_exploratory, alpha, mu0, delta);
}

AdversarialAudit audit_adversarial_regret(const EpisodeTrace& trace,
                                          const Eigen::MatrixXd& rewards,
                                          Index num_exploratory, double alpha, double mu0,
                                          double delta) {
  return finish_adversarial_audit(realized_regret(trace, rewards),
                                  static_cast<Round>(trace.rows.size()), num_exploratory, alpha,
                                  mu0, delta);
}

LowerBound lower_bound_B(Index num_exploratory, Round horizon, double alpha, double mu0) {
  const double k = static_cast<double>(num_exploratory);
  const double n = static_cast<double>(horizon);
  const double c = 16.0 * std::numbers::e + 8.0;
  LowerBound lb;
  lb.small_alpha_term = k / (c * alpha * mu0);
  lb.minimax_term = std::sqrt(k * n) / std::sqrt(c);
  lb.value = std::max(lb.small_alpha_term, lb.minimax_term);
  const double needed =
      std::max(1.0 / (2.0 * std::sqrt(alpha)), std::sqrt(std::numbers::e + 0.5)) *
      std::sqrt(k / n);
  lb.valid = std::min(mu0, 1.0 - mu0) >= needed;
  return lb;
}

// -- configuration ------------------------------------------------------------

std::string_view to_string(SweepKind sweep) {
  switch (sweep) {
    case SweepKind::alpha:
      return "alpha";
    case SweepKind::horizon:
      return "n";
    case SweepKind::none:
      break;
  }
  return "none";
}

void ExperimentConfig::validate() const {
  ProblemInstance probe;
  probe.means = means;
  if (alphas.empty()) throw ConfigError("alpha", "empty list");
  if (horizons.empty()) throw ConfigError("n", "empty list");
  if (!std::is_sorted(alphas.begin(), alphas.end()) ||
      std::adjacent_find(alphas.begin(), alphas.end()) != alphas.end()) {
    throw ConfigError("alpha", "sweep values must be strictly ascending");
  }
  if (!std::is_sorted(horizons.begin(), horizons.end()) ||
      std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
    throw ConfigError("n", "sweep values must be strictly ascending");
  }
  if (alphas.size() > 1 && sweep != SweepKind::alpha) {
    throw ConfigError("alpha", "a list of values needs an alpha sweep");
  }
  if (horizons.size() > 1 && sweep != SweepKind::horizon) {
    throw ConfigError("n", "a list of values needs a horizon sweep");
  }
  if (!delta.inverse_horizon && !(delta.value > 0.0 && delta.value < 1.0)) {
    throw ConfigError("delta", "must lie in (0,1) or be \"1/n\"");
  }
  if (policies.empty()) throw ConfigError("policies", "empty roster");
  for (const auto& p : policies) {
    if (!is_known_policy(p)) throw ConfigError("policies", "unknown policy \"" + p + "\"");
  }
  if (replications < 1) throw ConfigError("replications", "must be at least 1");
  if (!(environment.sigma >= 0.0)) throw ConfigError("sigma", "must be nonnegative");

  for (double a : alphas) {
    for (Round n : horizons) {
      probe.alpha = a;
      probe.horizon = n;
      probe.delta = delta.resolve(n);
      if (n < 2 && delta.inverse_horizon) {
        throw ConfigError("n", "delta = 1/n needs n >= 2");
      }
      probe.validate();
      if (expectation_mode) expectation_mode_params(a, n);
    }
  }
  const bool needs_mu0 = std::any_of(policies.begin(), policies.end(), [](const std::string& p) {
    return p == "budgetfirst" || p == "unbalanced-moss";
  });
  if (needs_mu0 && !(means(0) > 0.0)) {
    throw ConfigError("means", "budgetfirst and unbalanced-moss need mu_0 > 0");
  }
  if (environment.kind == EnvironmentKind::adversarial && !environment.table &&
      !is_builtin_adversary(environment.adversary)) {
    throw ConfigError("adversary", "unknown adversary \"" + environment.adversary + "\"");
  }
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<SweepPoint> points;
  const auto add = [&](double alpha, Round n, double value) {
    points.push_back(SweepPoint{alpha, n, config.delta.resolve(n), value});
  };
  switch (config.sweep) {
    case SweepKind::alpha:
      for (double a : config.alphas) add(a, config.horizons.front(), a);
      break;
    case SweepKind::horizon:
      for (Round n : config.horizons) add(config.alphas.front(), n, static_cast<double>(n));
      break;
    case SweepKind::none:
      add(config.alphas.front(), config.horizons.front(), config.alphas.front());
      break;
  }
  return points;
}

// -- Monte Carlo --------------------------------------------------------------

unsigned default_thread_count() {
  if (const char* env = std::getenv("CONSBANDIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = compensated_sum(values) / n;
  if (values.size() < 2) return {mean, 0.0};
  CompensatedSum squares;
  for (double v : values) squares += (v - mean) * (v - mean);
  const double sd = std::sqrt(squares.value() / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

namespace {

// Replications per work item. Fixed so that reductions do not depend on the
// thread count.
constexpr Index kBlockSize = 16;

struct ProfilePartial {
  Eigen::VectorXd sum;
  Eigen::VectorXd sum_squares;
};

}  // namespace

MonteCarloResult monte_carlo(const ExperimentConfig& config, const MonteCarloOptions& options) {
  config.validate();
  const std::vector<SweepPoint> points = sweep_points(config);
  const std::size_t num_policies = config.policies.size();
  const Index reps = config.replications;
  const Index blocks = (reps + kBlockSize - 1) / kBlockSize;
  const std::size_t num_items = points.size() * num_policies * static_cast<std::size_t>(blocks);

  MonteCarloResult result;
  result.runs.resize(points.size() * num_policies * static_cast<std::size_t>(reps));
  std::vector<ProfilePartial> partials(options.round_profiles ? num_items : 0);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_item = num_items;

  const auto work = [&] {
    for (;;) {
      const std::size_t item = next.fetch_add(1);
      if (item >= num_items) return;
      const std::size_t cell = item / static_cast<std::size_t>(blocks);
      const Index block = static_cast<Index>(item % static_cast<std::size_t>(blocks));
      const SweepPoint& point = points[cell / num_policies];
      const std::string& policy = config.policies[cell % num_policies];

      ProblemInstance instance;
      instance.means = config.means;
      instance.alpha = point.alpha;
      instance.delta = point.delta;
      instance.horizon = point.horizon;

      Index rep = block * kBlockSize;
      try {
        const Index end = std::min(reps, rep + kBlockSize);
        if (options.round_profiles) {
          partials[item].sum = Eigen::VectorXd::Zero(point.horizon);
          partials[item].sum_squares = Eigen::VectorXd::Zero(point.horizon);
        }
        for (; rep < end; ++rep) {
          const std::uint64_t seed =
              replication_seed(config.seed_base, static_cast<std::uint64_t>(rep));
          const EpisodeTrace trace = run_episode(policy, config.environment, instance, seed,
                                                 config.psi, config.expectation_mode);
          RunRecord& rec = result.runs[cell * static_cast<std::size_t>(reps) +
                                       static_cast<std::size_t>(rep)];
          rec.policy = policy;
          rec.alpha = point.alpha;
          rec.horizon = point.horizon;
          rec.delta = point.delta;
          rec.replication = rep;
          rec.seed = seed;
          rec.pseudo_regret = trace.pseudo_regret;
          rec.realized_regret = trace.realized_regret;
          rec.min_pseudo_budget = trace.ledger.min_pseudo_budget;
          rec.violated = trace.ledger.first_violation_round.has_value();
          rec.first_violation_round = trace.ledger.first_violation_round;
          rec.pulls = trace.pulls;
          if (options.round_profiles) {
            auto& p = partials[item];
            for (std::size_t t = 0; t < trace.rows.size(); ++t) {
              const double z = trace.rows[t].pseudo_budget;
              p.sum(static_cast<Index>(t)) += z;
              p.sum_squares(static_cast<Index>(t)) += z * z;
            }
          }
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (item < first_error_item) {
          first_error_item = item;
          first_error = std::make_exception_ptr(std::runtime_error(
              "policy " + policy + ", alpha=" + format_double(point.alpha) +
              ", n=" + std::to_string(point.horizon) + ", replication " + std::to_string(rep) +
              ": " + e.what()));
        }
        next.store(num_items);
        return;
      }
    }
  };

  const unsigned threads =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(num_items)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);

  // Ordered reduction by (sweep point, policy, replication).
  const Index arms = config.means.size();
  for (std::size_t cell = 0; cell < points.size() * num_policies; ++cell) {
    const SweepPoint& point = points[cell / num_policies];
    const auto first = result.runs.begin() + static_cast<std::ptrdiff_t>(cell * static_cast<std::size_t>(reps));
    const auto last = first + static_cast<std::ptrdiff_t>(reps);

    std::vector<double> pseudo, realized, min_budget;
    CompensatedSum violations;
    std::vector<CompensatedSum> pulls(static_cast<std::size_t>(arms));
    for (auto it = first; it != last; ++it) {
      pseudo.push_back(it->pseudo_regret);
      realized.push_back(it->realized_regret);
      min_budget.push_back(it->min_pseudo_budget);
      violations += it->violated ? 1.0 : 0.0;
      for (Index i = 0; i < arms; ++i) pulls[static_cast<std::size_t>(i)] += static_cast<double>(it->pulls(i));
    }
    SummaryRow row;
    row.policy = config.policies[cell % num_policies];
    row.sweep = config.sweep;
    row.sweep_value = point.sweep_value;
    row.alpha = point.alpha;
    row.horizon = point.horizon;
    row.replications = reps;
    std::tie(row.mean_pseudo_regret, row.stderr_pseudo_regret) = mean_and_stderr(pseudo);
    row.mean_realized_regret = mean_and_stderr(realized).first;
    row.violation_rate = violations.value() / static_cast<double>(reps);
    row.mean_min_budget = mean_and_stderr(min_budget).first;
    row.mean_pulls.resize(arms);
    for (Index i = 0; i < arms; ++i) {
      row.mean_pulls(i) = pulls[static_cast<std::size_t>(i)].value() / static_cast<double>(reps);
    }
    result.summary.push_back(std::move(row));

    if (options.round_profiles) {
      const Index n = point.horizon;
      RoundProfile profile;
      profile.policy = config.policies[cell % num_policies];
      profile.sweep_value = point.sweep_value;
      profile.mean_budget.resize(n);
      profile.stderr_budget.resize(n);
      const double N = static_cast<double>(reps);
      for (Index t = 0; t < n; ++t) {
        CompensatedSum s, ss;
        for (Index b = 0; b < blocks; ++b) {
          const auto& p = partials[cell * static_cast<std::size_t>(blocks) + static_cast<std::size_t>(b)];
          s += p.sum(t);
          ss += p.sum_squares(t);
        }
        const double mean = s.value() / N;
        const double var =
            reps > 1 ? std::max(0.0, (ss.value() - N * mean * mean) / (N - 1.0)) : 0.0;
        profile.mean_budget(t) = mean;
        profile.stderr_budget(t) = std::sqrt(var / N);
      }
      result.profiles.push_back(std::move(profile));
    }
  }
  return result;
}

// -- CSV ----------------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs, Index num_arms) {
  out << "policy,alpha,n,delta,replication,seed,pseudo_regret,realized_regret,"
         "min_pseudo_budget,violated,first_violation_round";
  for (Index i = 0; i < num_arms; ++i) out << ",pulls_" << i;
  out << '\n';
  for (const auto& r : runs) {
    out << r.policy << ',' << format_double(r.alpha) << ',' << r.horizon << ','
        << format_double(r.delta) << ',' << r.replication << ',' << r.seed << ','
        << format_double(r.pseudo_regret) << ',' << format_double(r.realized_regret) << ','
        << format_double(r.min_pseudo_budget) << ',' << (r.violated ? 1 : 0) << ',';
    if (r.first_violation_round) out << *r.first_violation_round;
    for (Index i = 0; i < num_arms; ++i) out << ',' << r.pulls(i);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "policy,sweep_var,sweep_value,mean_pseudo_regret,stderr,violation_rate,mean_min_budget\n";
  for (const auto& s : summary) {
    out << s.policy << ',' << to_string(s.sweep) << ',' << format_double(s.sweep_value) << ','
        << format_double(s.mean_pseudo_regret) << ',' << format_double(s.stderr_pseudo_regret)
        << ',' << format_double(s.violation_rate) << ',' << format_double(s.mean_min_budget)
        << '\n';
  }
}

}  // namespace consbandit
