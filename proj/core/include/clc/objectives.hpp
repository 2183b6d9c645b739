#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <tuple>
#include <vector>

#include "clc/log_dist.hpp"
#include "clc/scenario.hpp"

namespace clc {

struct MonteCarloOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
};

/// Raw Monte-Carlo round-trip draws for one prompt. Only draws landing in the
/// prompt's candidate set are counted; `accepted` is their number.
struct MonteCarloCounts {
  std::map<Id, std::size_t> counts;
  std::size_t accepted = 0;
  std::size_t samples = 0;
};

/// Sample translated prompt, reference response, back-translation, `samples`
/// times. Deterministic in `opts.seed`. Throws DomainError when samples < 1.
MonteCarloCounts monte_carlo_round_trip(const Scenario& s, LangId m, LangId n, Id prompt,
                                        const MonteCarloOptions& opts);

/// p_mn(.|x): translate x from m to n, respond with the reference model of n,
/// translate back, and condition on x's candidates. Entries below kLogEps are
/// raised to it; `floored` reports that.
///
/// With `mc`, translators that are not deterministic are handled by sampling;
/// unseen candidates get the floor. Deterministic translators always use the
/// exact sum.
LogDist round_trip_target(const Scenario& s, LangId m, LangId n, Id prompt,
                          const std::optional<MonteCarloOptions>& mc = std::nullopt,
                          bool* floored = nullptr);

/// Every p_mn(.|x) of a scenario, computed once.
class TargetTable {
 public:
  /// Monte-Carlo seeds are derived from mc->seed per (m, n, prompt).
  static TargetTable compute(const Scenario& s,
                             const std::optional<MonteCarloOptions>& mc = std::nullopt);

  const LogDist& at(LangId m, LangId n, Id prompt) const;
  /// Prompts with at least one floored target entry.
  const std::set<Id>& floored() const { return floored_; }

 private:
  std::map<std::tuple<LangId, LangId, Id>, LogDist> rows_;
  std::set<Id> floored_;
};

/// Scores over one prompt's candidates, aligned with `ids` (ascending).
struct LogitRow {
  std::vector<Id> ids;
  std::vector<double> values;

  friend bool operator==(const LogitRow&, const LogitRow&) = default;
};

/// Unnormalized scores z(y|x) keyed by prompt, across all languages.
using LogitTable = std::map<Id, LogitRow>;

enum class Norm { kL1, kL2 };

Norm parse_norm(std::string_view text);
std::string_view to_string(Norm norm);

/// The three parts of the per-prompt penalized objective:
/// total = fidelity - reward_term, where fidelity = KL(theta || ref) and
/// reward_term = sum over n != m of beta_mn * E_theta[log p_mn].
struct PcoValue {
  double fidelity = 0.0;
  double reward_term = 0.0;
  double total = 0.0;
};

/// Bilingual objective at one prompt. Requires two languages. Throws
/// DomainError when `prompt` is not a prompt of `lang`.
PcoValue pco_objective(const Scenario& s, const TargetTable& targets, const PolicySet& theta,
                       Id prompt, LangId lang);
PcoValue pco_objective(const Scenario& s, const PolicySet& theta, Id prompt, LangId lang);

/// Any number of languages; equals pco_objective when there are two.
PcoValue n_language_objective(const Scenario& s, const TargetTable& targets,
                              const PolicySet& theta, Id prompt, LangId lang);
PcoValue n_language_objective(const Scenario& s, const PolicySet& theta, Id prompt, LangId lang);

/// Sum over languages of the prior-weighted per-prompt objective.
PcoValue total_objective(const Scenario& s, const TargetTable& targets, const PolicySet& theta);

struct ClosedFormOptimum {
  PolicySet policy;
  /// log Z(x): the shift between each row's unnormalized log-target and
  /// log pi*(.|x).
  std::map<Id, double> log_normalizers;
  /// Prompts whose round-trip target needed the kLogEps floor.
  std::set<Id> floored_rows;
};

/// pi*(.|x) proportional to ref(.|x) * p_12(.|x)^beta1 on language 0 and
/// symmetrically on language 1. Requires two languages.
ClosedFormOptimum closed_form_optimum(const Scenario& s, const TargetTable& targets);
ClosedFormOptimum closed_form_optimum(const Scenario& s);

/// pi*(.|x_m) proportional to ref(.|x_m) * prod over n != m of p_mn^beta_mn.
ClosedFormOptimum n_language_optimum(const Scenario& s, const TargetTable& targets);
ClosedFormOptimum n_language_optimum(const Scenario& s);

/// log ref(y|x) + sum over n != m of beta_mn log p_mn(y|x), for each candidate
/// of x.
LogitRow dco_log_targets(const Scenario& s, const TargetTable& targets, Id prompt, LangId lang);
/// All prompts of all languages.
LogitTable dco_log_targets(const Scenario& s, const TargetTable& targets);

/// Per-prompt weights from the language priors.
std::map<Id, double> prior_weights(const Scenario& s);

/// Weighted sum over prompts of the L1 (or squared L2) distance between z
/// and the targets. Throws StructuralError when rows do not line up.
double dco_loss(const LogitTable& z, const LogitTable& targets, Norm norm,
                const std::map<Id, double>& weights);

/// Subgradient of dco_loss in z. For L1 the sign of a zero residual is 0.
LogitTable dco_gradient(const LogitTable& z, const LogitTable& targets, Norm norm,
                        const std::map<Id, double>& weights);

LogDist softmax(const LogitRow& row);
/// softmax of every row, grouped into one kernel per language.
PolicySet induced_policy(const Scenario& s, const LogitTable& z);
/// log of every row of a policy set.
LogitTable log_policy(const PolicySet& pi);

/// Largest per-prompt total-variation distance between two policy sets over
/// the same prompts.
double max_row_tv(const PolicySet& a, const PolicySet& b);

}  // namespace clc
