#pragma once

#include <variant>

#include "clc/divergence.hpp"
#include "clc/kernel.hpp"
#include "clc/scenario.hpp"

namespace clc {

/// Minimize over T on a log-spaced grid, then refine around the best grid
/// point by golden-section search.
struct TemperatureSearch {
  double lo = 1e-3;
  double hi = 1e3;
  int points = 61;
  /// Stop refining once the bracket's hi/lo ratio is below 1 + rel_width.
  double rel_width = 1e-6;
};

/// Evaluate at the given temperatures only.
struct FixedTemperatures {
  double t_a = 1.0;
  double t_b = 1.0;
};

using TemperatureMode = std::variant<TemperatureSearch, FixedTemperatures>;

struct DirectionResult {
  Divergence divergence = Divergence::finite(0.0);
  double temperature = 1.0;
};

/// Whether a policy agrees with its own annealed round trip on one aligned
/// prompt pair, in both directions.
struct ConsistencyReport {
  LangId lang_a = 0;
  LangId lang_b = 1;
  Id prompt_a = 0;
  Id prompt_b = 0;
  /// D_f(pi_a(.|x_a) || anneal(round trip through b, T_a)) at the best T_a.
  DirectionResult direction_a;
  DirectionResult direction_b;
  /// The larger of the two directional divergences.
  Divergence divergence_at_best_t = Divergence::finite(0.0);
  double epsilon = 0.0;
  bool satisfied = false;
};

/// The round trip x_a -> language b -> back, conditioned on the support of
/// pi_a(.|x_a).
LogDist policy_round_trip(const PolicySet& pi, const TranslatorSet& translators, LangId a,
                          LangId b, Id prompt_a);

/// Throws DomainError for an empty or malformed temperature grid and
/// StructuralError when kernels do not compose.
ConsistencyReport check_consistency(const PolicySet& pi, const TranslatorSet& translators,
                                    LangId lang_a, LangId lang_b, Id prompt_a, Id prompt_b,
                                    const DivergenceSpec& spec, double eps,
                                    const TemperatureMode& mode = TemperatureSearch{});

}  // namespace clc
