#include "clc/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "clc/error.hpp"
#include "clc/rng.hpp"

namespace clc {
namespace {

constexpr int kDivergencePatience = 50;
constexpr int kMaxHalvings = 60;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double norm2(const LogitTable& g) {
  double s = 0.0;
  for (const auto& [x, row] : g) {
    for (double v : row.values) s += v * v;
  }
  return std::sqrt(s);
}

// Largest row-wise TV between the policies induced by two logit tables.
double policy_change(const LogitTable& before, const LogitTable& after) {
  double worst = 0.0;
  for (const auto& [x, a] : after) {
    worst = std::max(worst, total_variation(softmax(before.at(x)), softmax(a)));
  }
  return worst;
}

// Whether some row of the step moves every entry by the same nonzero amount.
// Such a step leaves the policy unchanged but still lowers the loss.
bool has_pure_shift(const LogitTable& step) {
  for (const auto& [x, row] : step) {
    const double d0 = row.values[0];
    bool same = d0 != 0.0;
    for (std::size_t i = 1; same && i < row.values.size(); ++i) same = row.values[i] == d0;
    if (same) return true;
  }
  return false;
}

// The step -eta * g. Under L1 each coordinate stops at its kink instead of
// crossing it, and lands on the target exactly; a plain subgradient step
// makes settled coordinates bounce around their kinks and forces eta to zero.
LogitTable dco_step(const LogitTable& z, const LogitTable& targets, const LogitTable& g,
                    double eta, Norm norm) {
  LogitTable step;
  for (const auto& [x, gr] : g) {
    LogitRow row{gr.ids, std::vector<double>(gr.values.size())};
    const auto& zv = z.at(x).values;
    const auto& tv = targets.at(x).values;
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      double d = -eta * gr.values[i];
      if (norm == Norm::kL1 && std::abs(d) >= std::abs(zv[i] - tv[i])) d = tv[i] - zv[i];
      row.values[i] = d;
    }
    step.emplace(x, std::move(row));
  }
  return step;
}

LogitTable apply_step(const LogitTable& z, const LogitTable& targets, const LogitTable& step,
                      Norm norm) {
  LogitTable out = z;
  for (auto& [x, row] : out) {
    const auto& d = step.at(x).values;
    const auto& tv = targets.at(x).values;
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      // A clipped step ends on the kink; write the target itself so the
      // residual is exactly zero.
      row.values[i] = norm == Norm::kL1 && d[i] == tv[i] - row.values[i] ? tv[i]
                                                                        : row.values[i] + d[i];
    }
  }
  return out;
}

std::vector<std::pair<LangId, Id>> all_prompts(const Scenario& s) {
  std::vector<std::pair<LangId, Id>> out;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    for (Id x : s.space(m).prompts) out.emplace_back(m, x);
  }
  return out;
}

}  // namespace

Method parse_method(std::string_view text) {
  if (text == "dco" || text == "dco-subgradient") return Method::kDcoSubgradient;
  if (text == "pco-reinforce") return Method::kPcoReinforce;
  throw DomainError("unknown method '" + std::string(text) + "', expected dco or pco-reinforce");
}

std::string_view to_string(Method method) {
  return method == Method::kDcoSubgradient ? "dco-subgradient" : "pco-reinforce";
}

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::kConverged:
      return "converged";
    case FitStatus::kMaxIters:
      return "max-iters";
    case FitStatus::kDiverged:
      return "diverged";
    case FitStatus::kStalled:
      return "stalled";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw DomainError("step size must be positive and finite");
  }
  if (max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (batch < 1) throw DomainError("batch must be at least 1");
  if (rollouts < 1) throw DomainError("rollouts must be at least 1");
}

std::string TrainTrace::to_csv() const {
  std::string out = "iteration,loss,tv_to_optimum,samples,millis,grad_norm\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%llu,%.3f,%.17g\n", r.iteration, r.loss,
                  r.tv_to_optimum, static_cast<unsigned long long>(r.samples), r.millis,
                  r.grad_norm);
    out += buf;
  }
  return out;
}

FitResult fit_dco(const Scenario& s, const OptimizerConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const TargetTable table = TargetTable::compute(s);
  const LogitTable targets = dco_log_targets(s, table);
  const auto weights = prior_weights(s);
  const PolicySet optimum = n_language_optimum(s, table).policy;

  FitResult res;
  res.logits = log_policy(s.ref);
  double loss = dco_loss(res.logits, targets, config.norm, weights);
  auto record = [&](int it, double grad_norm) {
    res.trace.rows.push_back({it, loss, max_row_tv(induced_policy(s, res.logits), optimum), 0,
                              elapsed_ms(start), grad_norm});
  };
  record(0, 0.0);

  int rising = 0;
  double prev_loss = loss;
  if (loss == 0.0) res.status = FitStatus::kConverged;
  for (int it = 1; it <= config.max_iters && res.status != FitStatus::kConverged; ++it) {
    const LogitTable g = dco_gradient(res.logits, targets, config.norm, weights);
    double eta = config.step_size;
    bool accepted = false;
    LogitTable step;
    LogitTable next;
    double next_loss = loss;
    for (int k = 0; k <= kMaxHalvings; ++k, eta *= 0.5) {
      step = dco_step(res.logits, targets, g, eta, config.norm);
      next = apply_step(res.logits, targets, step, config.norm);
      next_loss = dco_loss(next, targets, config.norm, weights);
      if (next_loss < loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status = FitStatus::kStalled;
      std::ostringstream os;
      os << "no step down to " << config.step_size << " * 2^-" << kMaxHalvings
         << " lowers the loss " << loss << " at iteration " << it;
      res.diagnostic = os.str();
      break;
    }
    const double moved = policy_change(res.logits, next);
    const bool shift = has_pure_shift(step);
    res.logits = std::move(next);
    loss = next_loss;
    res.iterations = it;
    record(it, norm2(g));

    rising = loss > prev_loss ? rising + 1 : 0;
    prev_loss = loss;
    if (rising >= kDivergencePatience) {
      res.status = FitStatus::kDiverged;
      res.diagnostic = "loss rose for 50 consecutive iterations";
      break;
    }
    if (loss == 0.0 || (moved < config.tol && !shift)) {
      res.status = FitStatus::kConverged;
    }
  }
  res.policy = induced_policy(s, res.logits);
  if (res.status == FitStatus::kMaxIters) {
    std::ostringstream os;
    os << "no convergence within " << config.max_iters << " iterations; final TV to optimum "
       << res.trace.rows.back().tv_to_optimum;
    res.diagnostic = os.str();
  }
  return res;
}

FitResult fit_pco_reinforce(const Scenario& s, const OptimizerConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const TargetTable table = TargetTable::compute(s);
  // The reward is the DCO log-target minus log pi_theta.
  const LogitTable targets = dco_log_targets(s, table);
  const PolicySet optimum = n_language_optimum(s, table).policy;
  const auto prompts = all_prompts(s);
  const std::size_t batch = std::min(static_cast<std::size_t>(config.batch), prompts.size());
  const auto rollouts = static_cast<std::size_t>(config.rollouts);

  FitResult res;
  res.logits = log_policy(s.ref);
  PolicySet pi = induced_policy(s, res.logits);
  double objective = total_objective(s, table, pi).total;
  std::uint64_t samples = 0;
  res.trace.rows.push_back(
      {0, objective, max_row_tv(pi, optimum), 0, elapsed_ms(start), 0.0});

  Rng rng(config.seed);
  int rising = 0;
  std::vector<double> rewards(rollouts);
  std::vector<std::size_t> draws(rollouts);
  for (int it = 1; it <= config.max_iters; ++it) {
    double g2 = 0.0;
    double max_tv = 0.0;
    for (std::size_t b : rng.sample_without_replacement(prompts.size(), batch)) {
      const auto [m, x] = prompts[b];
      LogitRow& row = res.logits.at(x);
      const LogDist before = softmax(row);
      const auto& t = targets.at(x).values;
      double mean = 0.0;
      for (std::size_t r = 0; r < rollouts; ++r) {
        draws[r] = rng.categorical(before);
        rewards[r] = t[draws[r]] - before.logp()[draws[r]];
        mean += rewards[r];
      }
      mean /= static_cast<double>(rollouts);
      // (1/R) sum (r - b)(e_y - pi): the pi part collapses to the summed
      // advantage times pi.
      std::vector<double> g(row.values.size(), 0.0);
      double adv_sum = 0.0;
      for (std::size_t r = 0; r < rollouts; ++r) {
        const double adv = rewards[r] - mean;
        g[draws[r]] += adv;
        adv_sum += adv;
      }
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = (g[i] - adv_sum * std::exp(before.logp()[i])) / static_cast<double>(rollouts);
        g2 += g[i] * g[i];
        row.values[i] += config.step_size * g[i];
      }
      max_tv = std::max(max_tv, total_variation(before, softmax(row)));
    }
    samples += static_cast<std::uint64_t>(batch) * rollouts;
    pi = induced_policy(s, res.logits);
    const double next = total_objective(s, table, pi).total;
    rising = next > objective ? rising + 1 : 0;
    objective = next;
    res.iterations = it;
    res.trace.rows.push_back(
        {it, objective, max_row_tv(pi, optimum), samples, elapsed_ms(start), std::sqrt(g2)});
    if (rising >= kDivergencePatience) {
      res.status = FitStatus::kDiverged;
      res.diagnostic = "objective rose for 50 consecutive iterations";
      break;
    }
    if (max_tv < config.tol) {
      res.status = FitStatus::kConverged;
      break;
    }
  }
  res.policy = std::move(pi);
  return res;
}

FitResult fit(const Scenario& s, const OptimizerConfig& config) {
  return config.method == Method::kDcoSubgradient ? fit_dco(s, config)
                                                  : fit_pco_reinforce(s, config);
}

GradientCheckResult gradient_check(const Scenario& s, const LogitTable& z, double h, Norm norm) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const LogitTable targets = dco_log_targets(s, TargetTable::compute(s));
  const auto weights = prior_weights(s);
  const LogitTable grad = dco_gradient(z, targets, norm, weights);

  GradientCheckResult out;
  LogitTable probe = z;
  for (auto& [x, row] : probe) {
    const auto& t = targets.at(x).values;
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      const double orig = row.values[i];
      if (norm == Norm::kL1 && std::abs(orig - t[i]) <= 10.0 * h) {
        ++out.skipped;
        continue;
      }
      row.values[i] = orig + h;
      const double up = dco_loss(probe, targets, norm, weights);
      row.values[i] = orig - h;
      const double down = dco_loss(probe, targets, norm, weights);
      row.values[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double a = grad.at(x).values[i];
      const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      out.max_rel_error = std::max(out.max_rel_error, err);
      ++out.checked;
    }
  }
  out.conclusive = out.checked > 0;
  return out;
}

}  // namespace clc
