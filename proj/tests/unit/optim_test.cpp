#include <gtest/gtest.h>

#include <sstream>

#include "builders.hpp"
#include "clc/error.hpp"
#include "clc/objectives.hpp"
#include "clc/optim.hpp"

using namespace clc;

namespace {

GeneratorConfig noisy(std::uint64_t seed, double leak) {
  GeneratorConfig c;
  c.n_prompts = 4;
  c.n_candidates = 4;
  c.translator.leak = leak;
  c.seed = seed;
  return c;
}

OptimizerConfig dco(Norm norm = Norm::kL1) {
  OptimizerConfig c;
  c.norm = norm;
  return c;
}

OptimizerConfig reinforce(int iters) {
  OptimizerConfig c;
  c.method = Method::kPcoReinforce;
  c.step_size = 0.5;
  c.max_iters = iters;
  c.rollouts = 256;
  c.seed = 5;
  return c;
}

// Logits away from the targets so that no coordinate sits at a kink.
LogitTable offset_logits(const Scenario& s, double by) {
  auto z = dco_log_targets(s, TargetTable::compute(s));
  int i = 0;
  for (auto& [x, row] : z) {
    for (double& v : row.values) v += (++i % 2 ? by : -by) * (1.0 + 0.1 * (i % 5));
  }
  return z;
}

}  // namespace

TEST(OptimizerConfig, RejectsNonPositiveSettings) {
  auto c = dco();
  EXPECT_NO_THROW(c.validate());
  c.step_size = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = dco();
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = dco();
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = dco();
  c.rollouts = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = dco();
  c.batch = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = dco();
  c.step_size = 0.0;
  EXPECT_THROW(fit_dco(generate(noisy(0, 0.0)), c), DomainError);
}

TEST(Method, Parses) {
  EXPECT_EQ(parse_method("dco"), Method::kDcoSubgradient);
  EXPECT_EQ(parse_method("dco-subgradient"), Method::kDcoSubgradient);
  EXPECT_EQ(parse_method("pco-reinforce"), Method::kPcoReinforce);
  EXPECT_THROW(parse_method("adam"), DomainError);
  EXPECT_EQ(to_string(FitStatus::kMaxIters), "max-iters");
}

TEST(FitDco, ReachesOptimumOnBenchmark) {
  auto s = generate(benchmark_config());
  auto r = fit_dco(s, dco());
  EXPECT_EQ(r.status, FitStatus::kConverged) << r.diagnostic;
  EXPECT_LE(r.trace.rows.back().tv_to_optimum, 1e-6);
  EXPECT_LT(max_row_tv(r.policy, closed_form_optimum(s).policy), 1e-6);
  EXPECT_EQ(r.trace.total_samples(), 0u);
  EXPECT_EQ(static_cast<int>(r.trace.rows.size()), r.iterations + 1);
}

TEST(FitDco, LossNeverRises) {
  for (Norm norm : {Norm::kL1, Norm::kL2}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto r = fit_dco(generate(noisy(seed, 0.2)), dco(norm));
      EXPECT_EQ(r.status, FitStatus::kConverged) << r.diagnostic;
      EXPECT_LE(r.trace.rows.back().tv_to_optimum, 1e-6);
      for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
        EXPECT_LT(r.trace.rows[i].loss, r.trace.rows[i - 1].loss);
      }
    }
  }
}

TEST(FitDco, AlreadyOptimalStartTakesNoSteps) {
  // One candidate per prompt: every policy is the optimum.
  auto c = noisy(1, 0.0);
  c.n_candidates = 1;
  auto r = fit_dco(generate(c), dco());
  EXPECT_EQ(r.status, FitStatus::kConverged);
  EXPECT_EQ(r.iterations, 0);
  ASSERT_EQ(r.trace.rows.size(), 1u);
}

TEST(FitDco, IterationBudgetIsReported) {
  auto c = dco();
  c.max_iters = 2;
  auto r = fit_dco(generate(noisy(2, 0.2)), c);
  EXPECT_EQ(r.status, FitStatus::kMaxIters);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_NE(r.diagnostic.find("2 iterations"), std::string::npos);
}

TEST(FitReinforce, CountsSamples) {
  auto s = generate(noisy(3, 0.0));
  auto c = reinforce(7);
  c.batch = 3;
  c.rollouts = 10;
  auto r = fit_pco_reinforce(s, c);
  EXPECT_EQ(r.iterations, 7);
  EXPECT_EQ(r.trace.total_samples(), 7u * 3u * 10u);
  for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
    EXPECT_EQ(r.trace.rows[i].samples, i * 30u);
  }
}

TEST(FitReinforce, BatchIsClampedToPromptCount) {
  auto s = generate(noisy(3, 0.0));
  auto c = reinforce(2);
  c.batch = 1000;
  c.rollouts = 4;
  EXPECT_EQ(fit_pco_reinforce(s, c).trace.total_samples(), 2u * 8u * 4u);
}

TEST(FitReinforce, ApproachesOptimum) {
  auto s = generate(benchmark_config());
  auto r = fit_pco_reinforce(s, reinforce(3000));
  EXPECT_NE(r.status, FitStatus::kDiverged) << r.diagnostic;
  EXPECT_LE(r.trace.rows.back().tv_to_optimum, 0.02);
  auto d = fit_dco(s, dco());
  EXPECT_LE(max_row_tv(r.policy, d.policy), 0.03);
}

TEST(FitReinforce, SeedDeterministic) {
  auto s = generate(noisy(4, 0.1));
  auto a = fit_pco_reinforce(s, reinforce(20));
  auto b = fit_pco_reinforce(s, reinforce(20));
  EXPECT_EQ(a.logits, b.logits);
}

TEST(Fit, Dispatches) {
  auto s = generate(noisy(5, 0.0));
  auto c = reinforce(3);
  EXPECT_EQ(fit(s, c).trace.total_samples(), 3u * 8u * 256u);
  EXPECT_EQ(fit(s, dco()).trace.total_samples(), 0u);
}

TEST(TrainTrace, CsvLayout) {
  TrainTrace t;
  t.rows.push_back({0, 1.5, 0.25, 0, 0.0, 0.0});
  t.rows.push_back({1, 0.5, 0.125, 64, 2.0, 3.0});
  std::istringstream in(t.to_csv());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,loss,tv_to_optimum,samples,millis,grad_norm");
  std::getline(in, line);
  EXPECT_EQ(line, "0,1.5,0.25,0,0.000,0");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.5,0.125,64,2.000,3");
}

TEST(GradientCheck, AgreesAwayFromKinks) {
  auto s = generate(noisy(6, 0.2));
  auto z = offset_logits(s, 0.3);
  auto l1 = gradient_check(s, z, 1e-6, Norm::kL1);
  EXPECT_TRUE(l1.conclusive);
  EXPECT_EQ(l1.skipped, 0u);
  EXPECT_LE(l1.max_rel_error, 1e-4);
  auto l2 = gradient_check(s, z, 1e-6, Norm::kL2);
  EXPECT_TRUE(l2.conclusive);
  EXPECT_LE(l2.max_rel_error, 1e-6);
}

TEST(GradientCheck, InconclusiveAtTargets) {
  auto s = generate(noisy(7, 0.2));
  auto z = dco_log_targets(s, TargetTable::compute(s));
  auto r = gradient_check(s, z, 1e-6, Norm::kL1);
  EXPECT_FALSE(r.conclusive);
  EXPECT_EQ(r.checked, 0u);
  EXPECT_GT(r.skipped, 0u);
  EXPECT_THROW(gradient_check(s, z, 0.0), DomainError);
}
