#include "clc/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "clc/consistency.hpp"
#include "clc/divergence.hpp"
#include "clc/error.hpp"
#include "clc/objectives.hpp"
#include "clc/optim.hpp"

namespace clc {
namespace {

constexpr double kMinPerturbationTv = 1e-3;
constexpr double kConsistencyTol = 1e-9;
constexpr double kShiftTol = 1e-12;
constexpr double kFitTol = 1e-6;

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

CheckResult skipped(std::string id, std::string why) {
  return {std::move(id), CheckStatus::kSkipped, 0.0, 0.0, std::move(why)};
}

// The optimum under test. In self-test mode every beta is raised by one.
Scenario subject(const Scenario& s, bool self_test) {
  if (!self_test) return s;
  Scenario c = s;
  auto beta = s.strengths.matrix();
  for (std::size_t m = 0; m < beta.size(); ++m) {
    for (std::size_t n = 0; n < beta.size(); ++n) {
      if (m != n) beta[m][n] = s.strengths.beta(static_cast<LangId>(m), static_cast<LangId>(n)) + 1.0;
    }
  }
  c.strengths = StrengthConfig::from_matrix(std::move(beta));
  return c;
}

CheckResult optimality(std::string id, const Scenario& s, const TargetTable& targets,
                       const PolicySet& candidate, const VerifyOptions& opts, Rng& rng) {
  const double base = total_objective(s, targets, candidate).total;
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.perturbations; ++i) {
    const PolicySet p = perturb_policy(candidate, rng, kMinPerturbationTv);
    margin = std::min(margin, total_objective(s, targets, p).total - base);
  }
  CheckResult r{std::move(id), margin > 0.0 ? CheckStatus::kPass : CheckStatus::kFail, margin, 0.0,
                ""};
  r.detail = cat("smallest objective margin over ", opts.perturbations,
                 " perturbations: observed ", margin, ", expected > 0");
  return r;
}

bool bijective_pairs(const Scenario& s, std::string& why) {
  const auto n = static_cast<LangId>(s.language_count());
  for (LangId a = 0; a < n; ++a) {
    for (LangId b = a + 1; b < n; ++b) {
      auto check = is_invertible_pair(s.translator(a, b), s.translator(b, a), 1e-12);
      if (!check) {
        why = cat("translators ", a, "<->", b, " are not invertible: ", check.diagnostic);
        return false;
      }
    }
  }
  return true;
}

CheckResult bilingual_consistency(const Scenario& s, const PolicySet& opt) {
  const std::string id = "consistency";
  if (s.language_count() != 2) return skipped(id, "needs exactly two languages");
  if (!s.strengths.is_balanced()) {
    return skipped(id, cat("strengths are unbalanced: beta1 * beta2 = ",
                           s.strengths.beta(0, 1) * s.strengths.beta(1, 0)));
  }
  std::string why;
  if (!bijective_pairs(s, why)) return skipped(id, why);
  const FixedTemperatures temps{s.strengths.beta(0, 1), s.strengths.beta(1, 0)};
  double worst = 0.0;
  for (auto kind : kAllDivergenceKinds) {
    for (const auto& [xa, xb] : s.aligned_prompts(0, 1)) {
      const auto rep = check_consistency(opt, s.translators, 0, 1, xa, xb, {kind},
                                         kConsistencyTol, temps);
      worst = std::max(worst, rep.divergence_at_best_t.value_or(
                                  std::numeric_limits<double>::infinity()));
    }
  }
  return {id, worst <= kConsistencyTol ? CheckStatus::kPass : CheckStatus::kFail, worst,
          kConsistencyTol,
          cat("largest divergence at T = (beta1, beta2) over all kinds: observed ", worst,
              ", expected <= ", kConsistencyTol)};
}

CheckResult dco_equivalence(const Scenario& s, const TargetTable& targets, const PolicySet& opt,
                            const VerifyOptions& opts, Rng& rng) {
  // Any per-prompt shift of the log-targets induces the optimum.
  LogitTable z = dco_log_targets(s, targets);
  for (auto& [x, row] : z) {
    const double c = 20.0 * (rng.uniform() - 0.5);
    for (double& v : row.values) v += c;
  }
  double worst = max_row_tv(induced_policy(s, z), opt);
  std::string detail = cat("shifted log-targets: TV ", worst);
  bool ok = worst <= kShiftTol;
  if (opts.run_fit) {
    OptimizerConfig cfg;
    const FitResult fit = fit_dco(s, cfg);
    const double tv = max_row_tv(fit.policy, opt);
    detail += cat("; fit_dco ", to_string(fit.status), " after ", fit.iterations,
                  " iterations: TV ", tv);
    ok = ok && tv <= kFitTol;
    worst = std::max(worst, tv);
  }
  return {"dco-equivalence", ok ? CheckStatus::kPass : CheckStatus::kFail, worst, kFitTol,
          detail + cat(", expected <= ", opts.run_fit ? kFitTol : kShiftTol)};
}

CheckResult n_language_consistency(const Scenario& s, const PolicySet& opt) {
  const std::string id = "n-lang-consistency";
  if (s.language_count() < 3) return skipped(id, "needs at least three languages");
  if (!s.strengths.has_factors()) return skipped(id, "strengths are not rank-one");
  if (!s.strengths.violations().empty()) return skipped(id, s.strengths.violations().front());
  std::string why;
  if (!bijective_pairs(s, why)) return skipped(id, why);
  const double defect = cocycle_defect(s);
  if (defect > 1e-12) return skipped(id, cat("translators break the cocycle identity by ", defect));

  const auto& u = s.strengths.u();
  double worst = 0.0;
  const auto n = static_cast<LangId>(s.language_count());
  for (LangId a = 0; a < n; ++a) {
    for (LangId b = 0; b < n; ++b) {
      if (a == b) continue;
      const Temperature ta(u[static_cast<std::size_t>(b)]);
      const Temperature tb(u[static_cast<std::size_t>(a)]);
      for (const auto& [xa, xb] : s.aligned_prompts(a, b)) {
        const LogDist lhs = anneal(opt[static_cast<std::size_t>(a)].row(xa), ta);
        const LogDist rhs = anneal(policy_round_trip(opt, s.translators, a, b, xa), tb);
        for (auto kind : kAllDivergenceKinds) {
          worst = std::max(worst, f_divergence({kind}, lhs, rhs)
                                      .value_or(std::numeric_limits<double>::infinity()));
        }
      }
    }
  }
  return {id, worst <= kConsistencyTol ? CheckStatus::kPass : CheckStatus::kFail, worst,
          kConsistencyTol,
          cat("largest pairwise annealed divergence: observed ", worst, ", expected <= ",
              kConsistencyTol)};
}

}  // namespace

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass:
      return "PASS";
    case CheckStatus::kFail:
      return "FAIL";
    case CheckStatus::kSkipped:
      return "SKIPPED";
  }
  return "UNKNOWN";
}

PolicySet perturb_policy(const PolicySet& pi, Rng& rng, double min_tv) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double sigma = std::exp(std::log(1e-3) + rng.uniform() * (std::log(0.3) - std::log(1e-3)));
    PolicySet out;
    for (const auto& k : pi) {
      std::map<Id, LogDist> rows;
      for (const auto& [x, d] : k.rows()) {
        std::vector<double> lw(d.logp().begin(), d.logp().end());
        for (double& v : lw) v += sigma * rng.normal();
        rows.emplace(x, LogDist::normalize({d.support().begin(), d.support().end()}, std::move(lw)));
      }
      out.emplace_back(k.domain(), k.codomain(), std::move(rows));
    }
    if (max_row_tv(out, pi) >= min_tv) return out;
  }
  throw DomainError("could not draw a perturbation of the requested size");
}

std::vector<CheckResult> verify_scenario(const Scenario& s, const VerifyOptions& opts) {
  require_valid(s);
  Rng rng(opts.seed);
  const TargetTable targets = TargetTable::compute(s);
  const Scenario subj = subject(s, opts.self_test);
  const TargetTable subj_targets = TargetTable::compute(subj);

  std::vector<CheckResult> out;
  if (s.language_count() == 2) {
    const PolicySet cand = closed_form_optimum(subj, subj_targets).policy;
    out.push_back(optimality("optimality", s, targets, cand, opts, rng));
  } else {
    out.push_back(skipped("optimality", "needs exactly two languages"));
  }
  const PolicySet n_cand = n_language_optimum(subj, subj_targets).policy;
  out.push_back(optimality("n-lang-optimality", s, targets, n_cand, opts, rng));

  const PolicySet opt = n_language_optimum(s, targets).policy;
  out.push_back(bilingual_consistency(s, opt));
  out.push_back(dco_equivalence(s, targets, opt, opts, rng));
  out.push_back(n_language_consistency(s, opt));
  return out;
}

std::vector<SuiteEntry> builtin_suite() {
  std::vector<SuiteEntry> out;
  auto add = [&](std::string name, GeneratorConfig c) {
    out.push_back({std::move(name), generate(c)});
  };
  std::uint64_t seed = 101;
  for (double beta : {0.5, 1.0, 2.0}) {
    GeneratorConfig c;
    c.n_prompts = 6;
    c.n_candidates = 4;
    c.u = {beta, 1.0};
    c.v = {1.0 / beta, 1.0};
    c.seed = seed++;
    add(cat("bilingual-bijective-beta", beta), c);
  }
  {
    GeneratorConfig c;
    c.n_prompts = 6;
    c.n_candidates = 4;
    c.translator = TranslatorMode::parse("noisy:0.2");
    c.seed = seed++;
    add("bilingual-noisy", c);
  }
  {
    GeneratorConfig c;
    c.n_prompts = 6;
    c.n_candidates = 3;
    c.seed = seed++;
    Scenario s = generate(c);
    s.strengths = StrengthConfig::bilingual(2.0, 2.0);
    out.push_back({"bilingual-unbalanced", std::move(s)});
  }
  {
    GeneratorConfig c;
    c.n_langs = 3;
    c.n_prompts = 5;
    c.n_candidates = 4;
    c.u = {1.0, 1.25, 0.8};
    c.v = {1.0, 0.8, 1.25};
    c.seed = seed++;
    add("trilingual-bijective", c);
  }
  {
    GeneratorConfig c;
    c.n_langs = 3;
    c.n_prompts = 5;
    c.n_candidates = 3;
    c.translator = TranslatorMode::parse("noisy:0.1");
    c.seed = seed++;
    add("trilingual-noisy", c);
  }
  return out;
}

}  // namespace clc
