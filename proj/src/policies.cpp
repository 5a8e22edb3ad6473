#include "consbandit/policies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

namespace consbandit {

bool is_known_policy(std::string_view name) {
  return std::find(kPolicyRoster.begin(), kPolicyRoster.end(), name) != kPolicyRoster.end();
}

bool is_adversarial_policy(std::string_view name) {
  return name == "exp3ix" || name == "safe-exp3ix";
}

ArmIndex argmax_lowest(const Eigen::ArrayXd& values) {
  ArmIndex best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

double budget_bound_known_mu0(const CountArray& pulls, const Eigen::ArrayXd& lower,
                              ArmIndex proposed, Round t, double alpha, double mu0) {
  CompensatedSum acc;
  for (Index i = 0; i < pulls.size(); ++i) acc += static_cast<double>(pulls(i)) * lower(i);
  acc += lower(proposed);
  return acc.value() - (1.0 - alpha) * static_cast<double>(t) * mu0;
}

double budget_bound_unknown_mu0(const CountArray& pulls, const Eigen::ArrayXd& lower,
                                double upper_default, ArmIndex proposed, Round t,
                                double alpha) {
  const double coefficient =
      static_cast<double>(pulls(0)) - (1.0 - alpha) * static_cast<double>(t);
  double default_term = 0.0;
  if (std::isinf(upper_default)) {
    if (coefficient < 0.0) return -std::numeric_limits<double>::infinity();
    if (coefficient > 0.0) return std::numeric_limits<double>::infinity();
  } else {
    default_term = coefficient * upper_default;
  }
  CompensatedSum acc;
  for (Index i = 1; i < pulls.size(); ++i) acc += static_cast<double>(pulls(i)) * lower(i);
  acc += lower(proposed);
  acc += default_term;
  return acc.value();
}

double budgetfirst_worst_regret(Round horizon, const ConfidenceSchedule& schedule) {
  const double n = static_cast<double>(horizon);
  const double k = static_cast<double>(schedule.num_exploratory());
  return 2.0 * std::sqrt(n * k * schedule.psi(horizon)) + k;
}

Round budgetfirst_t0(double worst_regret, double alpha, double mu0, Round horizon) {
  if (!(mu0 > 0.0)) throw ConfigError("means", "BudgetFirst needs mu_0 > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha", "BudgetFirst needs alpha > 0");
  const double rounds = std::ceil(worst_regret / (alpha * mu0));
  if (rounds >= static_cast<double>(horizon)) return horizon;
  return std::max<Round>(0, static_cast<Round>(rounds));
}

Round budgetfirst_t0(const ProblemInstance& instance, const ConfidenceSchedule& schedule) {
  return budgetfirst_t0(budgetfirst_worst_regret(instance.horizon, schedule), instance.alpha,
                        instance.mu0(), instance.horizon);
}

Eigen::VectorXd umoss_budget_vector(Round horizon, Index num_exploratory, double alpha,
                                    double mu0) {
  const double n = static_cast<double>(horizon);
  const double k = static_cast<double>(num_exploratory);
  const double other = std::sqrt(n * k) + k / (alpha * mu0);
  Eigen::VectorXd budgets = Eigen::VectorXd::Constant(num_exploratory + 1, other);
  budgets(0) = n * k / other;
  return budgets;
}

Eigen::VectorXd umoss_budget_vector(const ProblemInstance& instance) {
  return umoss_budget_vector(instance.horizon, instance.num_exploratory(), instance.alpha,
                             instance.mu0());
}

double umoss_index(double mean, std::int64_t pulls, Round horizon, double budget) {
  if (pulls <= 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(horizon);
  const double T = static_cast<double>(pulls);
  const double log_plus = std::max(0.0, std::log(n * n / (budget * budget * T)));
  return mean + std::sqrt(2.0 / T * log_plus);
}

double admissible_bound(Round t, Index num_exploratory, double delta) {
  if (num_exploratory < 2) throw std::domain_error("admissible_bound: K must be >= 2");
  if (t < 1) throw std::domain_error("admissible_bound: t must be >= 1");
  const double tt = static_cast<double>(t);
  const double k = static_cast<double>(num_exploratory);
  return 7.0 * std::sqrt(k * tt * std::log(k)) * std::log(4.0 * tt * tt / delta);
}

ExpectationParams expectation_mode_params(double alpha, Round horizon) {
  // Require alpha >= c/n with c = 2; alpha in O(1/n) leaves a constant
  // exploration budget.
  if (horizon < 1 || alpha < 2.0 / static_cast<double>(horizon)) {
    throw ConfigError("alpha", "expectation mode needs alpha >= 2/n (alpha=" +
                                   std::to_string(alpha) + ", n=" + std::to_string(horizon) +
                                   ")");
  }
  ExpectationParams params;
  params.delta = 1.0 / static_cast<double>(horizon);
  params.alpha = (alpha - params.delta) / (1.0 - params.delta);
  return params;
}

Eigen::ArrayXd exp3ix_distribution(const Eigen::ArrayXd& loss_estimates, double eta) {
  const Eigen::ArrayXd weights = (-eta * (loss_estimates - loss_estimates.minCoeff())).exp();
  return weights / weights.sum();
}

// -- IndexPolicy --------------------------------------------------------------

IndexPolicy::IndexPolicy(Index num_exploratory, ConfidenceSchedule schedule,
                         std::optional<double> known_mu0)
    : stats_(static_cast<std::size_t>(num_exploratory + 1)),
      schedule_(schedule),
      known_mu0_(known_mu0),
      radii_(Eigen::ArrayXd::Constant(num_exploratory + 1,
                                      std::numeric_limits<double>::infinity())) {}

void IndexPolicy::observe(Round /*t*/, ArmIndex arm, double reward) {
  auto& s = stats_[static_cast<std::size_t>(arm)];
  s = update_stats(s, reward);
  radii_(arm) = schedule_.radius(s.pulls);
}

CountArray IndexPolicy::pulls() const {
  CountArray out(num_arms());
  for (Index i = 0; i < num_arms(); ++i) out(i) = stats_[static_cast<std::size_t>(i)].pulls;
  return out;
}

Eigen::ArrayXd IndexPolicy::upper_bounds() const {
  Eigen::ArrayXd theta(num_arms());
  for (Index i = 0; i < num_arms(); ++i) {
    theta(i) = stats_[static_cast<std::size_t>(i)].empirical_mean + radii_(i);
  }
  if (known_mu0_) theta(0) = *known_mu0_;
  return theta;
}

Eigen::ArrayXd IndexPolicy::lower_bounds() const {
  Eigen::ArrayXd lambda(num_arms());
  for (Index i = 0; i < num_arms(); ++i) {
    lambda(i) = std::max(0.0, stats_[static_cast<std::size_t>(i)].empirical_mean - radii_(i));
  }
  if (known_mu0_) lambda(0) = *known_mu0_;
  return lambda;
}

// -- Ucb ----------------------------------------------------------------------

Ucb::Ucb(Index num_exploratory, ConfidenceSchedule schedule, std::optional<double> known_mu0)
    : IndexPolicy(num_exploratory, schedule, known_mu0) {}

Decision Ucb::select(Round /*t*/) {
  Decision d;
  d.arm = argmax_lowest(upper_bounds());
  d.proposed = d.arm;
  return d;
}

// -- ConservativeUcb ----------------------------------------------------------

ConservativeUcb::ConservativeUcb(Index num_exploratory, ConfidenceSchedule schedule,
                                 double alpha, std::optional<double> known_mu0,
                                 FallbackRule fallback)
    : IndexPolicy(num_exploratory, schedule, known_mu0), alpha_(alpha), fallback_(fallback) {}

std::string_view ConservativeUcb::name() const {
  if (!known_mu0_) return "cucb-unknown-mu0";
  return fallback_ == FallbackRule::lower_bound ? "cucb-alt" : "cucb";
}

double ConservativeUcb::budget_bound(Round t, ArmIndex proposed) const {
  const CountArray T = pulls();
  const Eigen::ArrayXd lambda = lower_bounds();
  if (known_mu0_) return budget_bound_known_mu0(T, lambda, proposed, t, alpha_, *known_mu0_);
  return budget_bound_unknown_mu0(T, lambda, upper_bounds()(0), proposed, t, alpha_);
}

Decision ConservativeUcb::select(Round t) {
  const Eigen::ArrayXd theta = upper_bounds();
  const ArmIndex proposed = argmax_lowest(theta);
  const double xi = budget_bound(t, proposed);
  last_proposed_ = proposed;
  last_xi_ = xi;

  Decision d;
  d.proposed = proposed;
  d.budget_bound = xi;
  if (xi >= 0.0) {
    d.arm = proposed;
  } else {
    d.safe_mode = true;
    d.arm = fallback_ == FallbackRule::lower_bound ? argmax_lowest(lower_bounds()) : kDefaultArm;
  }
  return d;
}

// -- BudgetFirst --------------------------------------------------------------

BudgetFirst::BudgetFirst(Index num_exploratory, ConfidenceSchedule schedule, double mu0,
                         Round t0)
    : IndexPolicy(num_exploratory, schedule, mu0), t0_(t0) {}

Decision BudgetFirst::select(Round t) {
  Decision d;
  if (t <= t0_) {
    d.arm = kDefaultArm;
    d.safe_mode = true;
    return d;
  }
  d.arm = argmax_lowest(upper_bounds());
  d.proposed = d.arm;
  return d;
}

// -- UnbalancedMoss -----------------------------------------------------------

UnbalancedMoss::UnbalancedMoss(Index num_exploratory, ConfidenceSchedule schedule,
                               Round horizon, Eigen::VectorXd budgets)
    : IndexPolicy(num_exploratory, schedule, std::nullopt),
      horizon_(horizon),
      budgets_(std::move(budgets)) {
  if (budgets_.size() != num_exploratory + 1) {
    throw std::invalid_argument("UnbalancedMoss: need one budget per arm");
  }
}

Decision UnbalancedMoss::select(Round /*t*/) {
  Eigen::ArrayXd index(num_arms());
  for (Index i = 0; i < num_arms(); ++i) {
    const auto& s = stats_[static_cast<std::size_t>(i)];
    index(i) = umoss_index(s.empirical_mean, s.pulls, horizon_, budgets_(i));
  }
  Decision d;
  d.arm = argmax_lowest(index);
  d.proposed = d.arm;
  return d;
}

// -- Exp3Ix -------------------------------------------------------------------

namespace {

std::atomic<bool> reward_clamp_warned{false};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Exp3Ix::Exp3Ix(Index num_exploratory, std::uint64_t seed)
    : loss_estimates_(Eigen::ArrayXd::Zero(num_exploratory + 1)),
      probabilities_(Eigen::ArrayXd::Constant(num_exploratory + 1,
                                              1.0 / static_cast<double>(num_exploratory + 1))),
      rng_(seed) {}

Decision Exp3Ix::select(Round t) {
  gamma_ = ix_gamma(t, num_arms());
  probabilities_ = exp3ix_distribution(loss_estimates_, 2.0 * gamma_);

  const double u = uniform01(rng_);
  double cumulative = 0.0;
  ArmIndex arm = num_arms() - 1;
  for (Index i = 0; i < num_arms(); ++i) {
    cumulative += probabilities_(i);
    if (u < cumulative) {
      arm = i;
      break;
    }
  }
  Decision d;
  d.arm = arm;
  d.proposed = arm;
  return d;
}

void Exp3Ix::observe(Round t, ArmIndex arm, double reward) {
  if (reward < 0.0 || reward > 1.0) {
    if (!reward_clamp_warned.exchange(true)) {
      std::cerr << "warning: exp3ix received reward " << reward << " at round " << t
                << " outside [0,1]; clamping (further warnings suppressed)\n";
    }
    reward = std::clamp(reward, 0.0, 1.0);
  }
  loss_estimates_(arm) += ix_loss_estimate(1.0 - reward, probabilities_(arm), gamma_);
}

// -- SafePlayWrapper ----------------------------------------------------------

SafePlayWrapper::SafePlayWrapper(std::unique_ptr<Policy> base, double alpha, double mu0)
    : base_(std::move(base)),
      name_("safe-" + std::string(base_->name())),
      alpha_(alpha),
      mu0_(mu0) {}

Decision SafePlayWrapper::select(Round /*t*/) {
  CompensatedSum default_total = default_total_;
  default_total += mu0_;
  const double z = collected_.value() - (1.0 - alpha_) * default_total.value();

  Decision d;
  d.budget_bound = z;
  delegated_ = z >= 0.0;
  if (delegated_) {
    const Decision inner = base_->select(base_clock_ + 1);
    d.arm = inner.arm;
    d.proposed = inner.arm;
  } else {
    d.arm = kDefaultArm;
    d.safe_mode = true;
  }
  return d;
}

void SafePlayWrapper::observe(Round /*t*/, ArmIndex arm, double reward) {
  collected_ += reward;
  default_total_ += mu0_;
  if (delegated_) {
    ++base_clock_;
    base_->observe(base_clock_, arm, reward);
  }
  delegated_ = false;
}

// -- factory ------------------------------------------------------------------

PolicyParams policy_params(const ProblemInstance& instance, PsiVariant psi) {
  PolicyParams p;
  p.num_exploratory = instance.num_exploratory();
  p.mu0 = instance.mu0();
  p.alpha = instance.alpha;
  p.delta = instance.delta;
  p.horizon = instance.horizon;
  p.psi = psi;
  return p;
}

std::unique_ptr<Policy> make_policy(std::string_view name, const PolicyParams& params,
                                    std::uint64_t seed) {
  const ConfidenceSchedule schedule(params.psi, params.num_exploratory, params.delta);
  const Index k = params.num_exploratory;
  if (name == "ucb") return std::make_unique<Ucb>(k, schedule, params.mu0);
  if (name == "cucb") return std::make_unique<ConservativeUcb>(k, schedule, params.alpha, params.mu0);
  if (name == "cucb-unknown-mu0") {
    return std::make_unique<ConservativeUcb>(k, schedule, params.alpha, std::nullopt);
  }
  if (name == "cucb-alt") {
    return std::make_unique<ConservativeUcb>(k, schedule, params.alpha, params.mu0,
                                             FallbackRule::lower_bound);
  }
  if (name == "budgetfirst") {
    const Round t0 = budgetfirst_t0(budgetfirst_worst_regret(params.horizon, schedule),
                                    params.alpha, params.mu0, params.horizon);
    return std::make_unique<BudgetFirst>(k, schedule, params.mu0, t0);
  }
  if (name == "unbalanced-moss") {
    return std::make_unique<UnbalancedMoss>(
        k, schedule, params.horizon,
        umoss_budget_vector(params.horizon, k, params.alpha, params.mu0));
  }
  if (name == "exp3ix") return std::make_unique<Exp3Ix>(k, seed);
  if (name == "safe-exp3ix") {
    return std::make_unique<SafePlayWrapper>(std::make_unique<Exp3Ix>(k, seed), params.alpha,
                                             params.mu0);
  }
  throw ConfigError("policies", "unknown policy \"" + std::string(name) + "\"");
}

}  // namespace consbandit
