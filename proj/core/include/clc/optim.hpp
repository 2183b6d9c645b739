#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clc/objectives.hpp"
#include "clc/scenario.hpp"

namespace clc {

enum class Method { kDcoSubgradient, kPcoReinforce };

/// Accepts "dco", "dco-subgradient", "pco-reinforce".
Method parse_method(std::string_view text);
std::string_view to_string(Method method);

struct OptimizerConfig {
  Method method = Method::kDcoSubgradient;
  /// Initial step; DCO halves it within an iteration until the loss drops.
  double step_size = 1.0;
  int max_iters = 10000;
  /// Prompts per step (REINFORCE), clamped to the number of prompts.
  int batch = 32;
  /// Samples per prompt per step (REINFORCE).
  int rollouts = 256;
  /// Stop when no row of the policy moves by more than this in TV.
  double tol = 1e-9;
  Norm norm = Norm::kL1;
  std::uint64_t seed = 0;

  /// Throws DomainError on a non-positive step, tolerance, iteration count,
  /// batch or rollout count.
  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  /// DCO loss, or the exact penalized objective for REINFORCE.
  double loss = 0.0;
  /// Largest per-prompt TV distance to the closed-form optimum.
  double tv_to_optimum = 0.0;
  /// Cumulative policy samples drawn.
  std::uint64_t samples = 0;
  /// Wall clock since the start of the fit.
  double millis = 0.0;
  double grad_norm = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  std::uint64_t total_samples() const { return rows.empty() ? 0 : rows.back().samples; }
  /// Header: iteration,loss,tv_to_optimum,samples,millis,grad_norm
  std::string to_csv() const;
};

enum class FitStatus {
  kConverged,
  /// Iteration budget spent without meeting the tolerance.
  kMaxIters,
  /// The loss rose for 50 consecutive iterations.
  kDiverged,
  /// No step size down to step_size * 2^-60 lowers the loss.
  kStalled,
};

std::string_view to_string(FitStatus status);

struct FitResult {
  PolicySet policy;
  /// Final logits, one row per prompt.
  LogitTable logits;
  TrainTrace trace;
  FitStatus status = FitStatus::kMaxIters;
  /// Iterations performed (0 when the start point is already optimal).
  int iterations = 0;
  std::string diagnostic;
};

/// Off-policy fit: subgradient descent on the DCO loss from z = log ref with
/// a backtracking step. Never samples.
FitResult fit_dco(const Scenario& s, const OptimizerConfig& config);

/// On-policy fit: score-function ascent on the negated penalized objective,
/// with the per-prompt mean reward as baseline. Consumes
/// iterations * batch * rollouts samples.
FitResult fit_pco_reinforce(const Scenario& s, const OptimizerConfig& config);

/// Dispatches on config.method.
FitResult fit(const Scenario& s, const OptimizerConfig& config);

struct GradientCheckResult {
  /// False when every coordinate sat within 10h of an L1 kink.
  bool conclusive = false;
  /// Max over checked coordinates of |analytic - fd| / max(1, |analytic|, |fd|).
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Compares dco_gradient against central differences of dco_loss with step h,
/// coordinate by coordinate. Under L1, coordinates with |residual| <= 10h are
/// skipped. Throws DomainError for h <= 0.
GradientCheckResult gradient_check(const Scenario& s, const LogitTable& z, double h,
                                   Norm norm = Norm::kL1);

}  // namespace clc
