#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clc/rng.hpp"
#include "clc/scenario.hpp"

namespace clc {

enum class CheckStatus { kPass, kFail, kSkipped };

std::string_view to_string(CheckStatus status);

/// One executable check of a closed-form property on one scenario.
struct CheckResult {
  /// optimality, n-lang-optimality, consistency, dco-equivalence,
  /// n-lang-consistency.
  std::string id;
  CheckStatus status = CheckStatus::kSkipped;
  double observed = 0.0;
  double threshold = 0.0;
  /// Why a check was skipped or what failed.
  std::string detail;
};

struct VerifyOptions {
  int perturbations = 100;
  /// Replace every strength beta by beta + 1 when building the optimum under
  /// test. The optimality checks must then fail.
  bool self_test = false;
  /// Also run fit_dco and require TV 1e-6 to the optimum.
  bool run_fit = true;
  std::uint64_t seed = 0;
};

/// Tilts every row of `pi` by exp(sigma * xi) with xi standard normal and
/// sigma log-uniform on [1e-3, 0.3], redrawing until some row moves by at
/// least `min_tv`. Throws DomainError after 1000 draws below it.
PolicySet perturb_policy(const PolicySet& pi, Rng& rng, double min_tv);

std::vector<CheckResult> verify_scenario(const Scenario& s, const VerifyOptions& opts);

struct SuiteEntry {
  std::string name;
  Scenario scenario;
};

/// Seeded bilingual and three-language scenarios covering balanced,
/// unbalanced, bijective and noisy settings.
std::vector<SuiteEntry> builtin_suite();

}  // namespace clc
