#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string_view>

#include "consbandit/core.hpp"

namespace consbandit {

// Confidence-width functions psi(s). All logarithms are natural.

template <typename Scalar>
Scalar psi_simple(std::int64_t s, Index num_exploratory, Scalar delta) {
  using std::log;
  if (s < 1) throw std::domain_error("psi_simple: s must be >= 1");
  const Scalar ss = static_cast<Scalar>(s);
  return Scalar(2) * log(static_cast<Scalar>(num_exploratory) * ss * ss * ss / delta);
}

template <typename Scalar>
Scalar psi_refined_coefficient(Scalar zeta) {
  using std::log;
  return zeta * (Scalar(1) + log(zeta)) / ((zeta - Scalar(1)) * log(zeta));
}

// log max{3, log zeta} + log(2 e^2 zeta) + c(zeta) log log(1 + s), zeta = K / delta.
template <typename Scalar>
Scalar psi_refined(std::int64_t s, Index num_exploratory, Scalar delta) {
  using std::log;
  using std::max;
  if (s < 1) throw std::domain_error("psi_refined: s must be >= 1");
  const Scalar zeta = static_cast<Scalar>(num_exploratory) / delta;
  const Scalar e2 = static_cast<Scalar>(std::numbers::e * std::numbers::e);
  return log(max(Scalar(3), log(zeta))) + log(Scalar(2) * e2 * zeta) +
         psi_refined_coefficient(zeta) * log(log(Scalar(1) + static_cast<Scalar>(s)));
}

enum class PsiVariant { simple, refined };

std::string_view to_string(PsiVariant variant);
PsiVariant parse_psi_variant(std::string_view name);

class ConfidenceSchedule {
 public:
  ConfidenceSchedule(PsiVariant variant, Index num_exploratory, double delta);

  PsiVariant variant() const { return variant_; }
  Index num_exploratory() const { return num_exploratory_; }
  double delta() const { return delta_; }
  double zeta() const { return static_cast<double>(num_exploratory_) / delta_; }

  double psi(std::int64_t s) const {
    return variant_ == PsiVariant::simple ? psi_simple(s, num_exploratory_, delta_)
                                          : psi_refined(s, num_exploratory_, delta_);
  }

  // Half-width sqrt(psi(T)/T); +inf for an arm never pulled.
  double radius(std::int64_t pulls) const {
    if (pulls <= 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(psi(pulls) / static_cast<double>(pulls));
  }

 private:
  PsiVariant variant_;
  Index num_exploratory_;
  double delta_;
};

inline double radius(const ArmStats& stats, const ConfidenceSchedule& schedule) {
  return schedule.radius(stats.pulls);
}

/// Coefficient-wise radius over a vector of pull counts.
inline Eigen::ArrayXd radius(const CountArray& pulls, const ConfidenceSchedule& schedule) {
  return pulls.unaryExpr([&](std::int64_t p) { return schedule.radius(p); });
}

}  // namespace consbandit
