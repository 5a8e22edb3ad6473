#include <doctest.h>

#include <random>

#include "consbandit/policies.hpp"

using namespace consbandit;

namespace {

ConfidenceSchedule refined(Index k, double delta) {
  return ConfidenceSchedule(PsiVariant::refined, k, delta);
}

}  // namespace

TEST_CASE("argmax_lowest breaks ties toward the lower index") {
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.2, 0.7, 0.7, 0.1}}) == 1);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.5, inf, inf}}) == 1);
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.5}}) == 0);
}

TEST_CASE("budget bounds, hand-computed") {
  CountArray pulls(2);
  pulls << 3, 2;
  // 3 * 0.5 + 2 * 0.2 + 0.2 - 0.9 * 6 * 0.5
  CHECK(budget_bound_known_mu0(pulls, Eigen::ArrayXd{{0.5, 0.2}}, 1, 6, 0.1, 0.5) ==
        doctest::Approx(-0.6).epsilon(1e-14));
  // 2 * 0.2 + 0.2 + (3 - 5.4) * 0.7
  CHECK(budget_bound_unknown_mu0(pulls, Eigen::ArrayXd{{0.0, 0.2}}, 0.7, 1, 6, 0.1) ==
        doctest::Approx(-1.08).epsilon(1e-14));

  const double inf = std::numeric_limits<double>::infinity();
  CountArray fresh = CountArray::Zero(3);
  fresh(1) = 4;
  const Eigen::ArrayXd lower{{0.0, 0.3, 0.0}};
  CHECK(budget_bound_unknown_mu0(fresh, lower, inf, 1, 5, 0.1) == -inf);
  // alpha = 1 zeroes the default arm's coefficient.
  CHECK(budget_bound_unknown_mu0(fresh, lower, inf, 1, 5, 1.0) ==
        doctest::Approx(4 * 0.3 + 0.3).epsilon(1e-14));
}

TEST_CASE("BudgetFirst prefix in setting S, delta = 1/n") {
  const ConfidenceSchedule sched = refined(4, 1e-4);
  CHECK(sched.psi(10000) == doctest::Approx(18.080249136940588).epsilon(1e-13));
  const double worst = budgetfirst_worst_regret(10000, sched);
  CHECK(worst == doctest::Approx(2.0 * std::sqrt(4e4 * 18.080249136940588) + 4).epsilon(1e-13));
  CHECK(worst == doctest::Approx(1704.835).epsilon(1e-6));
  CHECK(budgetfirst_t0(worst, 0.1, 0.5, 1000000) == 34097);
  CHECK(budgetfirst_t0(worst, 0.1, 0.5, 10000) == 10000);
  CHECK_THROWS_AS(budgetfirst_t0(worst, 0.1, 0.0, 10000), ConfigError);
}

TEST_CASE("unbalanced MOSS budgets and index") {
  const Eigen::VectorXd b = umoss_budget_vector(10000, 4, 0.1, 0.5);
  REQUIRE(b.size() == 5);
  CHECK(b(1) == doctest::Approx(280.0).epsilon(1e-15));
  CHECK(b(4) == doctest::Approx(280.0).epsilon(1e-15));
  CHECK(b(0) == doctest::Approx(142.85714285714286).epsilon(1e-15));

  const Eigen::VectorXd c = umoss_budget_vector(100, 1, 1.0, 1.0);
  CHECK(c(1) == doctest::Approx(11.0).epsilon(1e-15));
  CHECK(c(0) == doctest::Approx(9.0909090909090909).epsilon(1e-15));

  CHECK(std::isinf(umoss_index(0.3, 0, 100, 11.0)));
  // n^2 / (B^2 T) = 10000 / (121 * 4) > 1
  CHECK(umoss_index(0.3, 4, 100, 11.0) ==
        doctest::Approx(0.3 + std::sqrt(0.5 * std::log(10000.0 / 484.0))).epsilon(1e-14));
  // log+ clips at zero once T exceeds n^2 / B^2.
  CHECK(umoss_index(0.3, 100, 100, 11.0) == 0.3);
}

TEST_CASE("admissible regret bound") {
  CHECK(admissible_bound(100, 4, 0.1) == doctest::Approx(2126.2738988216354).epsilon(1e-14));
  CHECK(admissible_bound(100, 4, 0.05) - admissible_bound(100, 4, 0.1) ==
        doctest::Approx(114.25658124574722).epsilon(1e-12));
  CHECK_THROWS_AS(admissible_bound(100, 1, 0.1), std::domain_error);
  CHECK_THROWS_AS(admissible_bound(0, 4, 0.1), std::domain_error);
}

TEST_CASE("expectation-mode parameters") {
  const auto p = expectation_mode_params(0.1, 10000);
  CHECK(p.delta == 1e-4);
  CHECK(p.alpha == (0.1 - 1e-4) / (1.0 - 1e-4));
  CHECK(p.alpha == doctest::Approx(0.099909990999099910).epsilon(1e-15));
  CHECK_NOTHROW(expectation_mode_params(2e-4, 10000));
  CHECK_THROWS_AS(expectation_mode_params(1e-4, 10000), ConfigError);
  CHECK_THROWS_AS(expectation_mode_params(1.5e-4, 10000), ConfigError);
}

TEST_CASE("implicit-exploration helpers") {
  CHECK(ix_loss_estimate(1.0, 0.6, 0.1) == doctest::Approx(1.4285714285714286).epsilon(1e-15));
  CHECK(ix_gamma(1, 5) == doctest::Approx(std::sqrt(std::log(5.0) / 20.0)).epsilon(1e-15));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::ArrayXd losses(5);
    for (auto& l : losses) l = u(rng);
    const Eigen::ArrayXd p = exp3ix_distribution(losses, u(rng) / 50.0);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((p >= 0.0).all());
  }
}

TEST_CASE("Exp3Ix keeps a distribution and clamps out-of-range rewards") {
  Exp3Ix learner(4, 11);
  CHECK(learner.num_arms() == 5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.5, 1.0);
  for (Round t = 1; t <= 2000; ++t) {
    const Decision d = learner.select(t);
    CHECK(std::abs(learner.probabilities().sum() - 1.0) <= 1e-12);
    REQUIRE(d.arm >= 0);
    REQUIRE(d.arm < 5);
    learner.observe(t, d.arm, noise(rng));
    REQUIRE(std::isfinite(learner.loss_estimates().sum()));
  }
}

TEST_CASE("UCB and conservative UCB agree exactly at alpha = 1") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::VectorXd means{{0.5, 0.6, 0.4, 0.4, 0.4}};
  Ucb ucb(4, refined(4, 1e-3), 0.5);
  ConservativeUcb cucb(4, refined(4, 1e-3), 1.0, 0.5);
  for (Round t = 1; t <= 1000; ++t) {
    const Decision a = ucb.select(t);
    const Decision b = cucb.select(t);
    REQUIRE(a.arm == b.arm);
    const double x = means(a.arm) + noise(rng);
    ucb.observe(t, a.arm, x);
    cucb.observe(t, b.arm, x);
  }
}

TEST_CASE("conservative UCB defers exploration until round 10 at alpha = 0.1, mu_0 = 0.5") {
  ConservativeUcb cucb(4, refined(4, 0.1), 0.1, 0.5);
  for (Round t = 1; t <= 10; ++t) {
    const Decision d = cucb.select(t);
    REQUIRE(d.proposed.has_value());
    CHECK(*d.proposed == 1);
    // xi_t = 0.5 (t - 1) - 0.45 t
    CHECK(d.budget_bound == doctest::Approx(0.05 * t - 0.5).epsilon(1e-12));
    if (t < 10) {
      CHECK(d.arm == 0);
      CHECK(d.safe_mode);
    } else {
      CHECK(d.arm == 1);
      CHECK_FALSE(d.safe_mode);
    }
    cucb.observe(t, d.arm, d.arm == 0 ? 0.5 : 0.6);
  }
}

TEST_CASE("unknown mu_0 plays the default arm until its bound is finite") {
  ConservativeUcb cucb(4, refined(4, 0.1), 0.1, std::nullopt);
  CHECK(cucb.name() == "cucb-unknown-mu0");
  const Decision d = cucb.select(1);
  CHECK(d.arm == 0);
  CHECK(d.budget_bound == -std::numeric_limits<double>::infinity());
}

TEST_CASE("alternative fallback plays the best lower bound") {
  ConservativeUcb base(2, refined(2, 0.1), 0.1, 0.5);
  ConservativeUcb alt(2, refined(2, 0.1), 0.1, 0.5, FallbackRule::lower_bound);
  CHECK(alt.name() == "cucb-alt");
  for (Round t = 1; t <= 1000; ++t) {
    base.observe(t, 1, 1.0);
    alt.observe(t, 1, 1.0);
  }
  // Arm 2 is unexplored, so it is proposed, and a large round index makes
  // the budget bound negative.
  const Decision b = base.select(3000);
  const Decision a = alt.select(3000);
  CHECK(*b.proposed == 2);
  CHECK(b.safe_mode);
  CHECK(b.arm == 0);
  CHECK(a.safe_mode);
  CHECK(a.arm == 1);
  CHECK(alt.lower_bounds()(1) > 0.5);
}

TEST_CASE("BudgetFirst plays the default prefix then UCB") {
  BudgetFirst bf(2, refined(2, 0.1), 0.5, 3);
  for (Round t = 1; t <= 3; ++t) {
    CHECK(bf.select(t).arm == 0);
    bf.observe(t, 0, 0.5);
  }
  CHECK(bf.select(4).arm == 1);
}

TEST_CASE("safe-play wrapper keeps the base learner on its own clock") {
  SafePlayWrapper w(std::make_unique<Exp3Ix>(2, 1), 0.5, 0.5);
  CHECK(w.name() == "safe-exp3ix");
  // Z'_1 = 0 - 0.5 * 0.5 < 0
  Decision d = w.select(1);
  CHECK(d.arm == 0);
  CHECK(d.safe_mode);
  CHECK(d.budget_bound == doctest::Approx(-0.25));
  w.observe(1, 0, 0.5);
  CHECK(w.base_rounds() == 0);
  // Z'_2 = 0.5 - 0.5 * 1.0 = 0
  d = w.select(2);
  CHECK_FALSE(d.safe_mode);
  w.observe(2, d.arm, 0.0);
  CHECK(w.base_rounds() == 1);
}

TEST_CASE("factory builds every roster policy") {
  PolicyParams params;
  params.num_exploratory = 4;
  params.mu0 = 0.5;
  params.alpha = 0.1;
  params.delta = 0.1;
  params.horizon = 1000;
  for (std::string_view name : kPolicyRoster) {
    auto p = make_policy(name, params, 1);
    CHECK(p->name() == name);
    CHECK(p->num_arms() == 5);
  }
  CHECK(is_adversarial_policy("safe-exp3ix"));
  CHECK_FALSE(is_adversarial_policy("cucb"));
  CHECK_THROWS_AS(make_policy("thompson", params, 1), ConfigError);
}

TEST_CASE("index policy worked examples") {
  Ucb unknown(2, refined(2, 0.1), std::nullopt);
  CHECK(unknown.select(1).arm == 0);
  Ucb known(2, refined(2, 0.1), 0.5);
  CHECK(known.select(1).arm == 1);
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.5, 0.62, 0.58}}) == 1);
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.5, 0.55, 0.1}}) == 1);
  CHECK(argmax_lowest(Eigen::ArrayXd{{0.5, 0.5, 0.5}}) == 0);

  // Known mu_0 pins both bounds of arm 0; lower bounds never go negative.
  ConservativeUcb c(2, refined(2, 0.1), 0.1, 0.5);
  c.observe(1, 1, -3.0);
  c.observe(2, 0, 0.9);
  CHECK(c.upper_bounds()(0) == 0.5);
  CHECK(c.lower_bounds()(0) == 0.5);
  CHECK((c.lower_bounds() >= 0.0).all());
}

TEST_CASE("unknown-mu_0 budget bound worked example") {
  CountArray pulls(2);
  pulls << 18, 2;
  // 2 * 0.3 + 0.3 + (18 - 18.9) * 0.55
  CHECK(budget_bound_unknown_mu0(pulls, Eigen::ArrayXd{{0.0, 0.3}}, 0.55, 1, 21, 0.1) ==
        doctest::Approx(0.405).epsilon(1e-13));
}

TEST_CASE("BudgetFirst prefix worked examples") {
  CHECK(budgetfirst_t0(100.0, 0.1, 0.5, 1000000) == 2000);
  CHECK(budgetfirst_t0(100.0, 1.0, 0.5, 1000000) == 200);
  CHECK(budgetfirst_t0(100.0, 0.1, 0.5, 1500) == 1500);
  BudgetFirst capped(2, refined(2, 0.1), 0.5, 50);
  for (Round t = 1; t <= 50; ++t) {
    REQUIRE(capped.select(t).arm == 0);
    capped.observe(t, 0, 0.5);
  }
}

TEST_CASE("unbalanced MOSS reduces to MOSS with balanced budgets") {
  const double n = 10000, k = 4, b = std::sqrt(n * k);
  for (std::int64_t T : {1, 10, 100, 2000}) {
    const double moss =
        0.3 + std::sqrt(2.0 / T * std::max(0.0, std::log(n / (k * static_cast<double>(T)))));
    CHECK(umoss_index(0.3, T, 10000, b) == doctest::Approx(moss).epsilon(1e-13));
  }
  // T = n^2 / B^2 exactly.
  CHECK(umoss_index(0.3, 2500, 10000, b) == 0.3);
  const Eigen::VectorXd large_alpha = umoss_budget_vector(10000, 4, 1e12, 0.5);
  CHECK(large_alpha(1) == doctest::Approx(200.0).epsilon(1e-9));
  CHECK(large_alpha(0) == doctest::Approx(200.0).epsilon(1e-9));
  UnbalancedMoss m(4, refined(4, 0.1), 10000, umoss_budget_vector(10000, 4, 0.1, 0.5));
  CHECK(m.select(1).arm == 0);
}

TEST_CASE("EXP3-IX worked examples") {
  Exp3Ix learner(4, 1);
  learner.select(1);
  for (Index i = 0; i < 5; ++i) CHECK(learner.probabilities()(i) == doctest::Approx(0.2));

  // Two arms, arm 0 sampled at p = 0.5 with loss 1, gamma = 0.2.
  const double est = ix_loss_estimate(1.0, 0.5, 0.2);
  CHECK(est == doctest::Approx(1.0 / 0.7).epsilon(1e-15));
  const double eta = 0.4;
  const Eigen::ArrayXd p = exp3ix_distribution(Eigen::ArrayXd{{est, 0.0}}, eta);
  CHECK(p(0) / p(1) == doctest::Approx(std::exp(-eta * est)).epsilon(1e-14));
}

TEST_CASE("safe-play wrapper onset and the alpha = 1 case") {
  SafePlayWrapper w(std::make_unique<Exp3Ix>(4, 2), 0.1, 0.5);
  for (Round t = 1; t <= 10; ++t) {
    const Decision d = w.select(t);
    // Z'_t = 0.5 (0.1 t - 1) during the all-default prefix.
    CHECK(d.budget_bound == doctest::Approx(0.5 * (0.1 * t - 1.0)).epsilon(1e-12));
    CHECK(d.safe_mode == (t < 10));
    w.observe(t, d.arm, d.arm == 0 ? 0.5 : 0.0);
  }
  CHECK(w.base_rounds() == 1);

  SafePlayWrapper free(std::make_unique<Exp3Ix>(4, 2), 1.0, 0.5);
  for (Round t = 1; t <= 200; ++t) {
    const Decision d = free.select(t);
    REQUIRE_FALSE(d.safe_mode);
    free.observe(t, d.arm, 0.0);
  }
  CHECK(free.base_rounds() == 200);
}

TEST_CASE("admissible bound is monotone and expectation mode fixes alpha = 1") {
  CHECK(admissible_bound(200, 4, 0.1) > admissible_bound(100, 4, 0.1));
  const auto p = expectation_mode_params(1.0, 100);
  CHECK(p.delta == 0.01);
  CHECK(p.alpha == 1.0);
}

TEST_CASE("conservative UCB records the bound behind each decision") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::VectorXd means{{0.5, 0.6, 0.4, 0.4, 0.4}};
  for (auto mu0 : {std::optional<double>(0.5), std::optional<double>()}) {
    ConservativeUcb c(4, refined(4, 1e-3), 0.1, mu0);
    for (Round t = 1; t <= 3000; ++t) {
      const Decision d = c.select(t);
      REQUIRE(d.proposed.has_value());
      if (*d.proposed != 0) {
        REQUIRE((d.arm == *d.proposed) == (d.budget_bound >= 0.0));
        REQUIRE((d.arm == 0) == (d.budget_bound < 0.0));
      }
      c.observe(t, d.arm, means(d.arm) + noise(rng));
    }
  }
}
