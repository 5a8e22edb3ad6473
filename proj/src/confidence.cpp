#include "consbandit/confidence.hpp"

#include <string>

namespace consbandit {

std::string_view to_string(PsiVariant variant) {
  return variant == PsiVariant::simple ? "simple" : "refined";
}

PsiVariant parse_psi_variant(std::string_view name) {
  if (name == "simple") return PsiVariant::simple;
  if (name == "refined") return PsiVariant::refined;
  throw ConfigError("psi", "expected \"simple\" or \"refined\", got \"" + std::string(name) + "\"");
}

ConfidenceSchedule::ConfidenceSchedule(PsiVariant variant, Index num_exploratory, double delta)
    : variant_(variant), num_exploratory_(num_exploratory), delta_(delta) {
  if (num_exploratory < 1) throw std::domain_error("ConfidenceSchedule: K must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::domain_error("ConfidenceSchedule: delta must lie in (0,1)");
  }
}

}  // namespace consbandit
