// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.
//
// Reference quantities come from the long-double oracles in tests/support;
// the library is only trusted for the thing each criterion is about.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "builders.hpp"
#include "clc/consistency.hpp"
#include "clc/metrics.hpp"
#include "clc/objectives.hpp"
#include "clc/optim.hpp"
#include "clc/report.hpp"
#include "clc/rng.hpp"
#include "clc/verify.hpp"
#include "commands.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace clc;

namespace {

// Pinned tolerances and budgets.
constexpr int kOptimalityScenarios = 50;
constexpr int kPerturbations = 100;
constexpr double kMinPerturbationTv = 1e-3;
constexpr double kOptimalitySeconds = 30.0;

constexpr double kConsistencyTol = 1e-9;
constexpr double kConsistencySeconds = 5.0;

constexpr double kDcoTv = 1e-6;
constexpr int kDcoMaxIters = 10000;
constexpr double kReinforceTv = 0.02;
constexpr int kReinforceRollouts = 256;
constexpr int kReinforceIters = 3000;
constexpr double kReinforceStep = 0.5;
constexpr double kAgreementTv = 0.03;
constexpr double kEquivalenceSeconds = 120.0;

constexpr double kRankcTol = 1e-12;
constexpr double kReductionTol = 1e-12;

constexpr double kFdStep = 1e-5;
constexpr double kL1GradTol = 1e-4;
constexpr double kL2GradTol = 1e-6;

constexpr std::size_t kMcSamples = 100000;
constexpr int kMcRuns = 100;
constexpr int kMcRequired = 95;
constexpr double kMcSe = 4.0;

constexpr int kSteeringScenarios = 10;
constexpr double kSteeringSlack = 1e-12;

constexpr double kMixtureRequired = 0.95;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Oracle helpers.

// Round-trip targets p_mn(.|x), restricted to x's candidates, in long double.
oracle::Dist oracle_target(const Scenario& s, LangId m, LangId n, Id x) {
  auto rt = oracle::round_trip(s.translator(m, n), s.ref[static_cast<std::size_t>(n)], s.translator(n, m), x);
  return oracle::restrict(rt, s.space(m).candidates_of(x));
}

// Prior-weighted penalized objective summed over languages.
long double oracle_objective(const Scenario& s, const PolicySet& theta) {
  long double total = 0;
  const auto n = static_cast<LangId>(s.language_count());
  for (LangId m = 0; m < n; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    for (Id x : s.space(m).prompts) {
      const auto th = oracle::probs(theta[mi].row(x));
      long double v = oracle::kl(th, oracle::probs(s.ref[mi].row(x)));
      for (LangId k = 0; k < n; ++k) {
        if (k == m) continue;
        const auto t = oracle_target(s, m, k, x);
        long double e = 0;
        for (const auto& [y, p] : th) e += p * std::log(t.at(y));
        v -= s.strengths.beta(m, k) * e;
      }
      total += s.priors[mi].prob(x) * v;
    }
  }
  return total;
}

std::map<Id, oracle::Dist> oracle_optimum(const Scenario& s) {
  std::map<Id, oracle::Dist> out;
  const auto n = static_cast<LangId>(s.language_count());
  for (LangId m = 0; m < n; ++m) {
    for (Id x : s.space(m).prompts) {
      std::vector<std::pair<oracle::Dist, long double>> tilts;
      for (LangId k = 0; k < n; ++k) {
        if (k != m) tilts.emplace_back(oracle_target(s, m, k, x), s.strengths.beta(m, k));
      }
      out[x] = oracle::geometric_optimum(oracle::probs(s.ref[static_cast<std::size_t>(m)].row(x)), tilts);
    }
  }
  return out;
}

double tv_to_oracle(const PolicySet& pi, const std::map<Id, oracle::Dist>& want) {
  long double worst = 0;
  for (const auto& k : pi) {
    for (const auto& [x, row] : k.rows()) worst = std::max(worst, oracle::tv(oracle::probs(row), want.at(x)));
  }
  return static_cast<double>(worst);
}

Scenario bilingual(int prompts, int cands, double beta, std::uint64_t seed, double leak = 0.0) {
  GeneratorConfig c;
  c.n_prompts = prompts;
  c.n_candidates = cands;
  c.u = {beta, 1.0};
  c.v = {1.0 / beta, 1.0};
  c.translator.leak = leak;
  c.seed = seed;
  return generate(c);
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng pick(2024);
  const double betas[] = {0.5, 1.0, 2.0};
  long double smallest = std::numeric_limits<long double>::infinity();
  int trials = 0;
  for (int i = 0; i < kOptimalityScenarios; ++i) {
    const int prompts = 4 + static_cast<int>(pick.uniform_index(13));
    const int cands = 2 + static_cast<int>(pick.uniform_index(7));
    const double beta = betas[pick.uniform_index(3)];
    const Scenario s = bilingual(prompts, cands, beta, 5000 + static_cast<std::uint64_t>(i));
    const PolicySet opt = closed_form_optimum(s).policy;
    const long double base = oracle_objective(s, opt);
    Rng rng(static_cast<std::uint64_t>(i));
    for (int k = 0; k < kPerturbations; ++k) {
      const PolicySet p = perturb_policy(opt, rng, kMinPerturbationTv);
      smallest = std::min(smallest, oracle_objective(s, p) - base);
      ++trials;
    }
  }
  const double secs = seconds_since(t0);
  return {smallest > 0 && secs < kOptimalitySeconds,
          "smallest margin " + fmt("%.3g", static_cast<double>(smallest)) + " over " +
              std::to_string(trials) + " perturbations (> 0), " + fmt("%.2f", secs) + " s (< 30)"};
}

Outcome consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const double betas[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  long double worst_oracle = 0;
  double worst_lib = 0.0;
  int scenarios = 0;
  for (int i = 0; i < 25; ++i) {
    const double beta = betas[i % 5];
    const Scenario s = bilingual(4 + i % 5, 2 + i % 6, beta, 7000 + static_cast<std::uint64_t>(i));
    const PolicySet opt = closed_form_optimum(s).policy;
    const double t_a = s.strengths.beta(0, 1);
    const double t_b = s.strengths.beta(1, 0);
    for (const auto& [xa, xb] : s.aligned_prompts(0, 1)) {
      for (DivergenceKind kind : kAllDivergenceKinds) {
        auto r = check_consistency(opt, s.translators, 0, 1, xa, xb, {kind}, kConsistencyTol,
                                   FixedTemperatures{t_a, t_b});
        worst_lib = std::max(worst_lib, r.divergence_at_best_t.value_or(INFINITY));
      }
      // Oracle: the round trip of a bijection relabels the other language's row.
      for (auto [a, b, x, t] : {std::tuple{0, 1, xa, t_a}, std::tuple{1, 0, xb, t_b}}) {
        const auto p = oracle::probs(opt[static_cast<std::size_t>(a)].row(x));
        oracle::Dist back;
        for (const auto& [y, v] : p) back[y] = opt[static_cast<std::size_t>(b)].row(x == xa ? xb : xa).prob(
                                           s.alignment.map_string(y, b));
        worst_oracle = std::max(worst_oracle, oracle::kl(p, oracle::power(oracle::normalized(back), t)));
        worst_oracle = std::max(worst_oracle, oracle::tv(p, oracle::power(oracle::normalized(back), t)));
      }
    }
    ++scenarios;
  }
  const double secs = seconds_since(t0);
  const double worst = std::max(worst_lib, static_cast<double>(worst_oracle));
  return {worst <= kConsistencyTol && secs < kConsistencySeconds,
          "largest divergence " + fmt("%.3g", worst) + " at T = (beta1, beta2) over " +
              std::to_string(scenarios) + " scenarios and 4 kinds (<= 1e-9), " + fmt("%.2f", secs) + " s (< 5)"};
}

struct EquivalenceRun {
  FitResult dco;
  FitResult reinforce;
  OptimizerConfig reinforce_config;
  double seconds = 0.0;
};

EquivalenceRun run_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = generate(benchmark_config());
  EquivalenceRun r;
  OptimizerConfig d;
  d.max_iters = kDcoMaxIters;
  r.dco = fit_dco(s, d);
  r.reinforce_config.method = Method::kPcoReinforce;
  r.reinforce_config.step_size = kReinforceStep;
  r.reinforce_config.max_iters = kReinforceIters;
  r.reinforce_config.rollouts = kReinforceRollouts;
  r.reinforce_config.batch = 4;
  r.reinforce_config.seed = 1;
  r.reinforce = fit_pco_reinforce(s, r.reinforce_config);
  r.seconds = seconds_since(t0);
  return r;
}

Outcome equivalence(const EquivalenceRun& r) {
  const Scenario s = generate(benchmark_config());
  const auto want = oracle_optimum(s);
  const double dco_tv = tv_to_oracle(r.dco.policy, want);
  const double pco_tv = tv_to_oracle(r.reinforce.policy, want);
  const double agree = max_row_tv(r.dco.policy, r.reinforce.policy);
  const bool ok = dco_tv <= kDcoTv && r.dco.iterations <= kDcoMaxIters && pco_tv <= kReinforceTv &&
                  agree <= kAgreementTv && r.seconds < kEquivalenceSeconds;
  return {ok, "dco TV " + fmt("%.3g", dco_tv) + " after " + std::to_string(r.dco.iterations) +
                  " iterations (<= 1e-6 within 10000); reinforce TV " + fmt("%.3g", pco_tv) +
                  " (<= 0.02); agreement " + fmt("%.3g", agree) + " (<= 0.03); " + fmt("%.2f", r.seconds) +
                  " s (< 120)"};
}

Outcome off_policy(const EquivalenceRun& r) {
  bool ok = true;
  for (const auto& row : r.dco.trace.rows) ok = ok && row.samples == 0;
  const auto& c = r.reinforce_config;
  const std::uint64_t per_step = static_cast<std::uint64_t>(c.batch) * static_cast<std::uint64_t>(c.rollouts);
  for (const auto& row : r.reinforce.trace.rows) {
    ok = ok && row.samples == static_cast<std::uint64_t>(row.iteration) * per_step;
  }
  const std::uint64_t expect = static_cast<std::uint64_t>(r.reinforce.iterations) * per_step;
  ok = ok && r.reinforce.trace.total_samples() == expect;
  return {ok, "dco samples " + std::to_string(r.dco.trace.total_samples()) + " (== 0); reinforce samples " +
                  std::to_string(r.reinforce.trace.total_samples()) + " (== " + std::to_string(r.reinforce.iterations) +
                  " x " + std::to_string(c.batch) + " x " + std::to_string(c.rollouts) + ")"};
}

Outcome rankc_values() {
  struct Case {
    std::vector<double> a, b;
    double expect;
  };
  const std::vector<Case> cases = {
      {{0.5, 0.3, 0.2}, {0.5, 0.3, 0.2}, 1.0},
      {{0.7, 0.3}, {0.4, 0.6}, 0.2689},
      {{0.5, 0.3, 0.2}, {0.3, 0.5, 0.2}, 0.3348},
  };
  double worst_oracle = 0.0;
  double worst_worked = 0.0;
  for (const auto& c : cases) {
    std::vector<Id> ids;
    std::map<Id, Id> map;
    for (std::size_t k = 0; k < c.a.size(); ++k) {
      ids.push_back(static_cast<Id>(k + 1));
      map.emplace(ids.back(), ids.back());
    }
    const auto d1 = LogDist::from_probs(ids, c.a);
    const auto d2 = LogDist::from_probs(ids, c.b);
    const double got = rankc(d1, d2, map);
    const auto want = oracle::rankc(oracle::order(oracle::probs(d1)), oracle::order(oracle::probs(d2)));
    worst_oracle = std::max(worst_oracle, std::abs(got - static_cast<double>(want)));
    worst_worked = std::max(worst_worked, std::abs(got - c.expect));
  }

  // Balanced bijective optima share rankings across languages exactly.
  int exact = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    const Scenario s = bilingual(6, 2 + i % 7, i % 2 ? 2.0 : 0.5, 9000 + static_cast<std::uint64_t>(i));
    const auto r = evaluate(s, closed_form_optimum(s).policy, "rankc", "optimum");
    for (double v : r.pairs[0].per_prompt) {
      ++total;
      if (v == 1.0) ++exact;
    }
  }
  const bool ok = worst_oracle <= kRankcTol && worst_worked <= 5e-5 && exact == total;
  return {ok, "max |rankc - oracle| " + fmt("%.3g", worst_oracle) + " (<= 1e-12); max |rankc - worked value| " +
                  fmt("%.3g", worst_worked) + " (4-digit rounding); optimum RankC == 1 on " +
                  std::to_string(exact) + "/" + std::to_string(total) + " prompts"};
}

Outcome n_language() {
  GeneratorConfig c;
  c.n_langs = 3;
  c.n_prompts = 6;
  c.n_candidates = 4;
  c.u = {1.0, 1.25, 0.8};
  c.v = {1.0, 0.8, 1.25};
  c.seed = 303;
  const Scenario s = generate(c);
  const auto opt = oracle_optimum(s);
  const auto& u = s.strengths.u();
  long double worst = 0;
  int pairs = 0;
  for (LangId a = 0; a < 3; ++a) {
    for (LangId b = 0; b < 3; ++b) {
      if (a == b) continue;
      ++pairs;
      for (const auto& [xa, xb] : s.aligned_prompts(a, b)) {
        const auto& pa = opt.at(xa);
        oracle::Dist back;
        for (const auto& [y, v] : pa) back[y] = opt.at(xb).at(s.alignment.map_string(y, b));
        const auto lhs = oracle::power(pa, u[static_cast<std::size_t>(b)]);
        const auto rhs = oracle::power(oracle::normalized(back), u[static_cast<std::size_t>(a)]);
        worst = std::max({worst, oracle::kl(lhs, rhs), oracle::kl(rhs, lhs), oracle::tv(lhs, rhs)});
      }
    }
  }
  double lib = INFINITY;
  VerifyOptions vo;
  vo.perturbations = 1;
  vo.run_fit = false;
  for (const auto& r : verify_scenario(s, vo)) {
    if (r.id == "n-lang-consistency" && r.status != CheckStatus::kSkipped) lib = r.observed;
  }
  const double lib_vs_oracle = tv_to_oracle(n_language_optimum(s).policy, opt);

  // N = 2: the general path reproduces the bilingual one.
  double reduction = 0.0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Scenario b2 = bilingual(5, 4, 2.0, 400 + seed, seed % 2 ? 0.2 : 0.0);
    if (seed >= 4) b2.strengths = StrengthConfig::bilingual(3.0, 0.7);
    const auto targets = TargetTable::compute(b2);
    reduction = std::max(reduction, max_row_tv(closed_form_optimum(b2, targets).policy,
                                               n_language_optimum(b2, targets).policy));
    for (LangId m = 0; m < 2; ++m) {
      for (Id x : b2.space(m).prompts) {
        reduction = std::max(reduction, std::abs(pco_objective(b2, targets, b2.ref, x, m).total -
                                                 n_language_objective(b2, targets, b2.ref, x, m).total));
      }
    }
  }
  const bool ok = worst <= kConsistencyTol && lib <= kConsistencyTol && lib_vs_oracle <= 1e-12 &&
                  reduction <= kReductionTol;
  return {ok, "oracle annealed divergence " + fmt("%.3g", static_cast<double>(worst)) + " over " +
                  std::to_string(pairs) + " ordered pairs, library " + fmt("%.3g", lib) + " (<= 1e-9); N=2 reduction " +
                  fmt("%.3g", reduction) + " (<= 1e-12)"};
}

// Weighted L1 or squared L2 distance, written out directly.
long double plain_loss(const LogitTable& z, const LogitTable& t, Norm norm, const std::map<Id, double>& w) {
  long double s = 0;
  for (const auto& [x, row] : t) {
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      const long double r = (long double)z.at(x).values[i] - row.values[i];
      s += w.at(x) * (norm == Norm::kL1 ? std::fabs(r) : r * r);
    }
  }
  return s;
}

double worst_fd_error(const Scenario& s, const LogitTable& z, const LogitTable& targets, Norm norm,
                      std::size_t* checked) {
  const auto w = prior_weights(s);
  const auto g = dco_gradient(z, targets, norm, w);
  double worst = 0.0;
  LogitTable probe = z;
  for (auto& [x, row] : probe) {
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      const double orig = row.values[i];
      if (norm == Norm::kL1 && std::abs(orig - targets.at(x).values[i]) <= 10 * kFdStep) continue;
      row.values[i] = orig + kFdStep;
      const long double up = plain_loss(probe, targets, norm, w);
      row.values[i] = orig - kFdStep;
      const long double down = plain_loss(probe, targets, norm, w);
      row.values[i] = orig;
      const double fd = static_cast<double>((up - down) / (2 * kFdStep));
      const double a = g.at(x).values[i];
      worst = std::max(worst, std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)}));
      ++*checked;
    }
  }
  return worst;
}

Outcome gradient() {
  double l1 = 0.0, l2 = 0.0;
  std::size_t n1 = 0, n2 = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scenario s = bilingual(6, 4, 1.0, 600 + seed, 0.2);
    const auto targets = dco_log_targets(s, TargetTable::compute(s));
    Rng rng(seed);
    LogitTable z = targets;
    for (auto& [x, row] : z) {
      for (double& v : row.values) v += (rng.uniform() < 0.5 ? -1 : 1) * (0.05 + 0.5 * rng.uniform());
    }
    l1 = std::max(l1, worst_fd_error(s, z, targets, Norm::kL1, &n1));
    l2 = std::max(l2, worst_fd_error(s, z, targets, Norm::kL2, &n2));
    // L2 has no kinks; check at the targets and at the reference too.
    l2 = std::max(l2, worst_fd_error(s, targets, targets, Norm::kL2, &n2));
    l2 = std::max(l2, worst_fd_error(s, log_policy(s.ref), targets, Norm::kL2, &n2));
  }
  return {l1 <= kL1GradTol && l2 <= kL2GradTol && n1 > 0,
          "L1 " + fmt("%.3g", l1) + " over " + std::to_string(n1) + " coordinates (<= 1e-4); L2 " + fmt("%.3g", l2) +
              " over " + std::to_string(n2) + " (<= 1e-6); h = 1e-5"};
}

Outcome monte_carlo() {
  GeneratorConfig c;
  c.n_prompts = 3;
  c.n_candidates = 4;
  c.translator.leak = 0.2;
  c.seed = 808;
  const Scenario s = generate(c);
  const Id x = s.spaces[0].prompts[0];
  const auto exact = oracle_target(s, 0, 1, x);
  int good = 0;
  for (int run = 0; run < kMcRuns; ++run) {
    const auto mc = monte_carlo_round_trip(s, 0, 1, x, {kMcSamples, 10000 + static_cast<std::uint64_t>(run)});
    bool all = mc.accepted > 0;
    for (const auto& [id, k] : mc.counts) {
      const double p = static_cast<double>(exact.at(id));
      const double n = static_cast<double>(mc.accepted);
      const double se = std::sqrt(p * (1 - p) / n);
      all = all && std::abs(static_cast<double>(k) / n - p) <= kMcSe * se;
    }
    good += all;
  }
  return {good >= kMcRequired, std::to_string(good) + "/" + std::to_string(kMcRuns) +
                                   " runs within 4 SE on every candidate (>= 95), S = 1e5"};
}

Outcome steering() {
  int l1_prompts = 0, l2_prompts = 0;
  bool kl_ok = true, changed_ok = true;
  double worst_l1 = -INFINITY, worst_l2 = INFINITY;
  for (int i = 0; i < kSteeringScenarios; ++i) {
    Scenario even = bilingual(8, 5, 1.0, 1100 + static_cast<std::uint64_t>(i));
    even.strengths = StrengthConfig::bilingual(1.0, 1.0);
    Scenario skew = even;
    skew.strengths = StrengthConfig::bilingual(0.1, 10.0);
    const PolicySet a = closed_form_optimum(even).policy;
    const PolicySet b = closed_form_optimum(skew).policy;
    for (LangId m = 0; m < 2; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      for (Id x : even.space(m).prompts) {
        const auto ref = oracle::probs(even.ref[mi].row(x));
        const double ka = static_cast<double>(oracle::kl(oracle::probs(a[mi].row(x)), ref));
        const double kb = static_cast<double>(oracle::kl(oracle::probs(b[mi].row(x)), ref));
        if (m == 0) {
          ++l1_prompts;
          worst_l1 = std::max(worst_l1, kb - ka);
          kl_ok = kl_ok && kb <= ka + kSteeringSlack;
        } else {
          ++l2_prompts;
          worst_l2 = std::min(worst_l2, kb - ka);
          kl_ok = kl_ok && kb >= ka - kSteeringSlack;
        }
      }
    }
    changed_ok = changed_ok && changed_fraction(even.ref[0], b[0]) <= changed_fraction(even.ref[0], a[0]);
  }
  return {kl_ok && changed_ok,
          "L1 KL change max " + fmt("%.3g", worst_l1) + " over " + std::to_string(l1_prompts) +
              " prompts (<= 0); L2 KL change min " + fmt("%.3g", worst_l2) + " over " + std::to_string(l2_prompts) +
              " prompts (>= 0); L1 changed fraction non-increasing in " + std::to_string(kSteeringScenarios) +
              " scenarios: " + (changed_ok ? "yes" : "no")};
}

Outcome mixture() {
  // L1 puts 0.97 on gold; L2 puts its maximum 0.4 on a wrong candidate.
  constexpr int kPrompts = 40;
  constexpr int kCands = 4;
  Rng rng(77);
  std::vector<std::vector<double>> l1, l2;
  std::vector<std::optional<std::size_t>> gold;
  for (int p = 0; p < kPrompts; ++p) {
    const std::size_t g = rng.uniform_index(kCands);
    std::size_t w = rng.uniform_index(kCands - 1);
    if (w >= g) ++w;
    std::vector<double> sharp(kCands, 0.01), diffuse(kCands, 0.0);
    sharp[g] = 0.97;
    std::vector<double> rest;
    do {
      rest = rng.dirichlet(2.0, kCands - 1);
    } while (*std::max_element(rest.begin(), rest.end()) * 0.6 >= 0.4);
    diffuse[w] = 0.4;
    for (std::size_t k = 0, j = 0; k < kCands; ++k) {
      if (k != w) diffuse[k] = 0.6 * rest[j++];
    }
    l1.push_back(sharp);
    l2.push_back(diffuse);
    gold.push_back(g);
  }
  std::vector<std::vector<std::vector<double>>> ref(2);
  for (int p = 0; p < kPrompts; ++p) {
    ref[0].push_back(l1[static_cast<std::size_t>(p)]);
    ref[1].push_back(l2[static_cast<std::size_t>(p)]);
  }
  const Scenario s = testing_support::bijective_scenario(ref, StrengthConfig::uniform(2), gold);
  const PolicySet opt = closed_form_optimum(s).policy;
  const auto want = oracle_optimum(s);
  double acc[2];
  bool agrees = true;
  for (LangId m = 0; m < 2; ++m) {
    acc[m] = accuracy(opt[static_cast<std::size_t>(m)], s.gold(m));
    for (const auto& [x, row] : opt[static_cast<std::size_t>(m)].rows()) {
      agrees = agrees && row.argmax() == oracle::order(want.at(x)).front();
    }
  }
  const bool ok = acc[0] >= kMixtureRequired && acc[1] >= kMixtureRequired && agrees;
  return {ok, "optimum argmax is gold on " + fmt("%.3f", acc[0]) + " (L1) and " + fmt("%.3f", acc[1]) +
                  " (L2) of prompts (>= 0.95); argmax matches oracle: " + (agrees ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args, std::string* err) {
  std::vector<const char*> argv{"clc-lab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = lab::run_cli(static_cast<int>(argv.size()), argv.data(), out, e);
  *err += e.str();
  return code;
}

Outcome golden() {
  const fs::path dir = fs::temp_directory_path() / "clc_acceptance_golden";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };
  std::string err;
  int code = cli({"gen", "--langs", "2", "--prompts", "4", "--cands", "4", "--seed", "7", "--out", p("scenario.json")}, &err);
  code = code ? code : cli({"fit", "--scenario", p("scenario.json"), "--method", "dco", "--out", p("policy.json")}, &err);
  code = code ? code
              : cli({"eval", "--scenario", p("scenario.json"), "--policy", p("policy.json"), "--format", "json",
                     "--out", p("metrics.json")},
                    &err);
  code = code ? code : cli({"report", p("metrics.json"), "--out", p("report.csv")}, &err);
  if (code != 0) return {false, "pipeline exited " + std::to_string(code) + ": " + err};

  std::vector<std::string> mismatched;
  int compared = 0;
  for (const char* name : {"scenario.json", "policy.json", "metrics.json", "report.csv"}) {
    const fs::path want = fs::path(CLC_GOLDEN_DIR) / name;
    if (!fs::exists(want) || slurp(want) != slurp(dir / name)) mismatched.push_back(name);
    ++compared;
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(compared - static_cast<int>(mismatched.size())) + "/" +
                       std::to_string(compared) + " artifacts byte-identical to tests/golden";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  EquivalenceRun eq;
  bool eq_done = false;
  auto equiv = [&]() -> const EquivalenceRun& {
    if (!eq_done) {
      eq = run_equivalence();
      eq_done = true;
    }
    return eq;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "optimality", optimality},
      {"AC2", "consistency", consistency},
      {"AC3", "dco-pco-equivalence", [&] { return equivalence(equiv()); }},
      {"AC4", "off-policy-samples", [&] { return off_policy(equiv()); }},
      {"AC5", "rankc", rankc_values},
      {"AC6", "n-language", n_language},
      {"AC7", "gradient-check", gradient},
      {"AC8", "monte-carlo", monte_carlo},
      {"AC9", "strength-steering", steering},
      {"AC10", "mixture", mixture},
      {"AC11", "golden-pipeline", golden},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%-4s %-20s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
