#include "clc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clc/error.hpp"
#include "clc/rng.hpp"

namespace clc {
namespace {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

void require_prompt(const Scenario& s, Id prompt, LangId lang) {
  if (lang < 0 || static_cast<std::size_t>(lang) >= s.language_count() ||
      !s.space(lang).has_prompt(prompt)) {
    throw DomainError(cat("prompt ", prompt, " is not a prompt of language ", lang));
  }
}

void require_two_languages(const Scenario& s) {
  if (s.language_count() != 2) {
    throw StructuralError(cat("bilingual path needs 2 languages, scenario has ",
                              s.language_count()));
  }
}

const LogDist& policy_row(const PolicySet& theta, LangId lang, Id prompt) {
  if (static_cast<std::size_t>(lang) >= theta.size()) {
    throw StructuralError(cat("no policy for language ", lang));
  }
  return theta[static_cast<std::size_t>(lang)].row(prompt);
}

void require_same_support(const LogDist& a, const LogDist& b, Id prompt) {
  if (!std::equal(a.support().begin(), a.support().end(), b.support().begin(),
                  b.support().end())) {
    throw StructuralError(cat("policy and reference supports differ at prompt ", prompt));
  }
}

// E_theta[log theta - log ref]; both rows share one support.
double fidelity(const LogDist& theta, const LogDist& ref) {
  double kl = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    kl += std::exp(theta.logp()[i]) * (theta.logp()[i] - ref.logp()[i]);
  }
  return std::max(kl, 0.0);
}

double expected_log(const LogDist& theta, const LogDist& target) {
  double e = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    e += std::exp(theta.logp()[i]) * target.log_prob(theta.support()[i]);
  }
  return e;
}

std::vector<LangId> other_languages(const Scenario& s, LangId m) {
  std::vector<LangId> out;
  for (LangId n = 0; n < static_cast<LangId>(s.language_count()); ++n) {
    if (n != m) out.push_back(n);
  }
  return out;
}

ClosedFormOptimum optimum_from_targets(const Scenario& s, const TargetTable& targets,
                                       const LogitTable& z) {
  ClosedFormOptimum out;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    std::map<Id, LogDist> rows;
    for (Id x : s.space(m).prompts) {
      const LogitRow& r = z.at(x);
      out.log_normalizers[x] = logsumexp(r.values);
      rows.emplace(x, softmax(r));
      if (targets.floored().contains(x)) out.floored_rows.insert(x);
    }
    out.policy.emplace_back(m, m, std::move(rows));
  }
  return out;
}

void check_aligned(const LogitTable& z, const LogitTable& targets) {
  if (z.size() != targets.size()) {
    throw StructuralError(cat("logit table has ", z.size(), " rows, targets have ",
                              targets.size()));
  }
  for (const auto& [x, t] : targets) {
    auto it = z.find(x);
    if (it == z.end()) throw StructuralError(cat("logit table has no row for prompt ", x));
    if (it->second.ids != t.ids || it->second.values.size() != t.values.size()) {
      throw StructuralError(cat("logit row of prompt ", x, " is not aligned with its target"));
    }
  }
}

double weight_of(const std::map<Id, double>& weights, Id x) {
  auto it = weights.find(x);
  if (it == weights.end()) throw StructuralError(cat("no weight for prompt ", x));
  return it->second;
}

}  // namespace

MonteCarloCounts monte_carlo_round_trip(const Scenario& s, LangId m, LangId n, Id prompt,
                                        const MonteCarloOptions& opts) {
  if (opts.samples < 1) throw DomainError("Monte-Carlo sample count must be at least 1");
  require_prompt(s, prompt, m);
  const StochasticKernel& out = s.translator(m, n);
  const StochasticKernel& back = s.translator(n, m);
  const StochasticKernel& ref = s.ref.at(static_cast<std::size_t>(n));
  const auto& cands = s.space(m).candidates_of(prompt);

  MonteCarloCounts mc;
  mc.samples = opts.samples;
  for (Id c : cands) mc.counts[c] = 0;
  Rng rng(opts.seed);
  const LogDist& first = out.row(prompt);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const Id x2 = first.support()[rng.categorical(first)];
    const LogDist& resp = ref.row(x2);
    const Id y2 = resp.support()[rng.categorical(resp)];
    const LogDist& ret = back.row(y2);
    const Id y = ret.support()[rng.categorical(ret)];
    auto it = mc.counts.find(y);
    if (it != mc.counts.end()) {
      ++it->second;
      ++mc.accepted;
    }
  }
  return mc;
}

LogDist round_trip_target(const Scenario& s, LangId m, LangId n, Id prompt,
                          const std::optional<MonteCarloOptions>& mc, bool* floored) {
  require_prompt(s, prompt, m);
  if (m == n) throw StructuralError("round-trip target needs two distinct languages");
  const StochasticKernel& out = s.translator(m, n);
  const StochasticKernel& back = s.translator(n, m);
  const auto& cands = s.space(m).candidates_of(prompt);

  if (!mc || (out.is_deterministic() && back.is_deterministic())) {
    if (mc && mc->samples < 1) throw DomainError("Monte-Carlo sample count must be at least 1");
    const LogDist rt = round_trip(out, s.ref.at(static_cast<std::size_t>(n)), back, prompt);
    return restrict_to(rt, cands, floored);
  }

  const MonteCarloCounts counts = monte_carlo_round_trip(s, m, n, prompt, *mc);
  std::vector<Id> ids;
  std::vector<double> lw;
  bool hit_floor = false;
  const double log_k = std::log(static_cast<double>(counts.accepted));
  for (const auto& [c, k] : counts.counts) {
    ids.push_back(c);
    double v = k > 0 ? std::log(static_cast<double>(k)) - log_k : kLogEps;
    if (v < kLogEps) v = kLogEps;
    if (v == kLogEps) hit_floor = true;
    lw.push_back(v);
  }
  if (floored) *floored = hit_floor;
  return LogDist::normalize(std::move(ids), std::move(lw));
}

TargetTable TargetTable::compute(const Scenario& s, const std::optional<MonteCarloOptions>& mc) {
  TargetTable t;
  std::uint64_t index = 0;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    for (Id x : s.space(m).prompts) {
      for (LangId n : other_languages(s, m)) {
        std::optional<MonteCarloOptions> opts;
        if (mc) opts = MonteCarloOptions{mc->samples, Rng::stream(mc->seed, index).next_u64()};
        ++index;
        bool floored = false;
        t.rows_.emplace(std::tuple{m, n, x}, round_trip_target(s, m, n, x, opts, &floored));
        if (floored) t.floored_.insert(x);
      }
    }
  }
  return t;
}

const LogDist& TargetTable::at(LangId m, LangId n, Id prompt) const {
  auto it = rows_.find({m, n, prompt});
  if (it == rows_.end()) {
    throw StructuralError(cat("no round-trip target ", m, "->", n, " for prompt ", prompt));
  }
  return it->second;
}

Norm parse_norm(std::string_view text) {
  if (text == "l1") return Norm::kL1;
  if (text == "l2") return Norm::kL2;
  throw DomainError(cat("unknown norm '", text, "', expected l1 or l2"));
}

std::string_view to_string(Norm norm) { return norm == Norm::kL1 ? "l1" : "l2"; }

PcoValue pco_objective(const Scenario& s, const TargetTable& targets, const PolicySet& theta,
                       Id prompt, LangId lang) {
  require_two_languages(s);
  require_prompt(s, prompt, lang);
  const LangId other = 1 - lang;
  const LogDist& th = policy_row(theta, lang, prompt);
  const LogDist& ref = s.ref.at(static_cast<std::size_t>(lang)).row(prompt);
  require_same_support(th, ref, prompt);
  PcoValue v;
  v.fidelity = fidelity(th, ref);
  v.reward_term = s.strengths.beta(lang, other) * expected_log(th, targets.at(lang, other, prompt));
  v.total = v.fidelity - v.reward_term;
  return v;
}

PcoValue pco_objective(const Scenario& s, const PolicySet& theta, Id prompt, LangId lang) {
  return pco_objective(s, TargetTable::compute(s), theta, prompt, lang);
}

PcoValue n_language_objective(const Scenario& s, const TargetTable& targets,
                              const PolicySet& theta, Id prompt, LangId lang) {
  if (s.language_count() < 2) throw StructuralError("objective needs at least 2 languages");
  require_prompt(s, prompt, lang);
  const LogDist& th = policy_row(theta, lang, prompt);
  const LogDist& ref = s.ref.at(static_cast<std::size_t>(lang)).row(prompt);
  require_same_support(th, ref, prompt);
  PcoValue v;
  v.fidelity = fidelity(th, ref);
  for (LangId n : other_languages(s, lang)) {
    v.reward_term += s.strengths.beta(lang, n) * expected_log(th, targets.at(lang, n, prompt));
  }
  v.total = v.fidelity - v.reward_term;
  return v;
}

PcoValue n_language_objective(const Scenario& s, const PolicySet& theta, Id prompt, LangId lang) {
  return n_language_objective(s, TargetTable::compute(s), theta, prompt, lang);
}

PcoValue total_objective(const Scenario& s, const TargetTable& targets, const PolicySet& theta) {
  PcoValue sum;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    const LogDist& prior = s.priors.at(static_cast<std::size_t>(m));
    for (Id x : s.space(m).prompts) {
      const double w = prior.prob(x);
      if (w == 0.0) continue;
      const PcoValue v = n_language_objective(s, targets, theta, x, m);
      sum.fidelity += w * v.fidelity;
      sum.reward_term += w * v.reward_term;
      sum.total += w * v.total;
    }
  }
  return sum;
}

ClosedFormOptimum closed_form_optimum(const Scenario& s, const TargetTable& targets) {
  require_two_languages(s);
  LogitTable z;
  for (LangId m = 0; m < 2; ++m) {
    const double beta = s.strengths.beta(m, 1 - m);
    for (Id x : s.space(m).prompts) {
      const LogDist& ref = s.ref.at(static_cast<std::size_t>(m)).row(x);
      const LogDist& target = targets.at(m, 1 - m, x);
      LogitRow row;
      row.ids.assign(ref.support().begin(), ref.support().end());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        row.values.push_back(beta * target.log_prob(row.ids[i]) + ref.logp()[i]);
      }
      z.emplace(x, std::move(row));
    }
  }
  return optimum_from_targets(s, targets, z);
}

ClosedFormOptimum closed_form_optimum(const Scenario& s) {
  return closed_form_optimum(s, TargetTable::compute(s));
}

ClosedFormOptimum n_language_optimum(const Scenario& s, const TargetTable& targets) {
  return optimum_from_targets(s, targets, dco_log_targets(s, targets));
}

ClosedFormOptimum n_language_optimum(const Scenario& s) {
  return n_language_optimum(s, TargetTable::compute(s));
}

LogitRow dco_log_targets(const Scenario& s, const TargetTable& targets, Id prompt, LangId lang) {
  require_prompt(s, prompt, lang);
  const LogDist& ref = s.ref.at(static_cast<std::size_t>(lang)).row(prompt);
  LogitRow row;
  row.ids.assign(ref.support().begin(), ref.support().end());
  row.values.assign(ref.logp().begin(), ref.logp().end());
  for (LangId n : other_languages(s, lang)) {
    const double beta = s.strengths.beta(lang, n);
    const LogDist& target = targets.at(lang, n, prompt);
    for (std::size_t i = 0; i < row.ids.size(); ++i) {
      row.values[i] += beta * target.log_prob(row.ids[i]);
    }
  }
  return row;
}

LogitTable dco_log_targets(const Scenario& s, const TargetTable& targets) {
  LogitTable out;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    for (Id x : s.space(m).prompts) out.emplace(x, dco_log_targets(s, targets, x, m));
  }
  return out;
}

std::map<Id, double> prior_weights(const Scenario& s) {
  std::map<Id, double> w;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    const LogDist& prior = s.priors.at(static_cast<std::size_t>(m));
    for (Id x : s.space(m).prompts) w[x] = prior.prob(x);
  }
  return w;
}

double dco_loss(const LogitTable& z, const LogitTable& targets, Norm norm,
                const std::map<Id, double>& weights) {
  check_aligned(z, targets);
  double loss = 0.0;
  for (const auto& [x, t] : targets) {
    const auto& zv = z.at(x).values;
    double row = 0.0;
    for (std::size_t i = 0; i < zv.size(); ++i) {
      const double r = zv[i] - t.values[i];
      row += norm == Norm::kL1 ? std::abs(r) : r * r;
    }
    loss += weight_of(weights, x) * row;
  }
  return loss;
}

LogitTable dco_gradient(const LogitTable& z, const LogitTable& targets, Norm norm,
                        const std::map<Id, double>& weights) {
  check_aligned(z, targets);
  LogitTable g;
  for (const auto& [x, t] : targets) {
    const auto& zv = z.at(x).values;
    const double w = weight_of(weights, x);
    LogitRow row{t.ids, std::vector<double>(zv.size())};
    for (std::size_t i = 0; i < zv.size(); ++i) {
      const double r = zv[i] - t.values[i];
      row.values[i] = norm == Norm::kL1 ? w * static_cast<double>((r > 0.0) - (r < 0.0))
                                        : 2.0 * w * r;
    }
    g.emplace(x, std::move(row));
  }
  return g;
}

LogDist softmax(const LogitRow& row) { return LogDist::normalize(row.ids, row.values); }

PolicySet induced_policy(const Scenario& s, const LogitTable& z) {
  PolicySet out;
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    std::map<Id, LogDist> rows;
    for (Id x : s.space(m).prompts) {
      auto it = z.find(x);
      if (it == z.end()) throw StructuralError(cat("logit table has no row for prompt ", x));
      rows.emplace(x, softmax(it->second));
    }
    out.emplace_back(m, m, std::move(rows));
  }
  return out;
}

LogitTable log_policy(const PolicySet& pi) {
  LogitTable out;
  for (const auto& k : pi) {
    for (const auto& [x, d] : k.rows()) {
      out.emplace(x, LogitRow{{d.support().begin(), d.support().end()},
                              {d.logp().begin(), d.logp().end()}});
    }
  }
  return out;
}

double max_row_tv(const PolicySet& a, const PolicySet& b) {
  if (a.size() != b.size()) throw StructuralError("policy sets cover different languages");
  double worst = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    for (const auto& [x, d] : a[m].rows()) worst = std::max(worst, total_variation(d, b[m].row(x)));
  }
  return worst;
}

}  // namespace clc
