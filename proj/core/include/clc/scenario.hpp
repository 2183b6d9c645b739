#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clc/kernel.hpp"
#include "clc/log_dist.hpp"

namespace clc {

/// One language's prompts and each prompt's ordered candidate responses.
struct LanguageSpace {
  LangId id = 0;
  std::vector<Id> prompts;
  std::map<Id, std::vector<Id>> candidates;

  const std::vector<Id>& candidates_of(Id prompt) const;
  bool has_prompt(Id prompt) const { return candidates.contains(prompt); }
  /// Every string of the language: prompts followed by all candidates.
  std::vector<Id> strings() const;

  friend bool operator==(const LanguageSpace&, const LanguageSpace&) = default;
};

/// Prompts that are translations of each other, one per language, together
/// with their aligned candidates.
struct PromptTuple {
  /// prompts[m] is the prompt in language m.
  std::vector<Id> prompts;
  /// candidates[k][m] is the k-th aligned candidate in language m.
  std::vector<std::vector<Id>> candidates;
  /// Index into `candidates` of the correct answer, when known.
  std::optional<std::size_t> gold;

  friend bool operator==(const PromptTuple&, const PromptTuple&) = default;
};

/// Bijections between aligned prompts and candidates across all languages.
/// Tuple storage makes every pairwise map a restriction of one global
/// alignment, so the maps compose consistently by construction.
class Alignment {
 public:
  Alignment() = default;
  explicit Alignment(std::vector<PromptTuple> tuples);

  const std::vector<PromptTuple>& tuples() const { return tuples_; }

  /// Tuple index holding `prompt`; nullopt when unaligned.
  std::optional<std::size_t> tuple_of(Id prompt) const;
  /// Aligned counterpart of a prompt or candidate in language `to`.
  Id map_string(Id id, LangId to) const;
  /// Candidate bijection between languages for one tuple.
  std::map<Id, Id> candidate_map(std::size_t tuple, LangId from, LangId to) const;
  /// Gold candidate of `prompt` in its own language, if the tuple has one.
  std::optional<Id> gold_of(Id prompt) const;

  friend bool operator==(const Alignment& a, const Alignment& b) { return a.tuples_ == b.tuples_; }

 private:
  struct Slot {
    std::size_t tuple;
    std::optional<std::size_t> candidate;  // nullopt for prompts
    LangId lang;
  };
  std::vector<PromptTuple> tuples_;
  std::map<Id, Slot> index_;
};

/// Per-language-pair reward weights beta_mn (m != n). Either rank-one,
/// beta_mn = u_m v_n, or an explicit matrix. The weight on log ref is always 1.
class StrengthConfig {
 public:
  StrengthConfig() = default;
  static StrengthConfig rank_one(std::vector<double> u, std::vector<double> v);
  /// Explicit off-diagonal weights; the diagonal is ignored.
  static StrengthConfig from_matrix(std::vector<std::vector<double>> beta);
  /// beta1 weights L1's round-trip reward, beta2 weights L2's. Stored as rank-one
  /// factors when beta1 * beta2 == 1.
  static StrengthConfig bilingual(double beta1, double beta2);
  static StrengthConfig uniform(std::size_t n) {
    return rank_one(std::vector<double>(n, 1.0), std::vector<double>(n, 1.0));
  }

  std::size_t size() const { return matrix_.size(); }
  double beta(LangId m, LangId n) const;
  const std::vector<std::vector<double>>& matrix() const { return matrix_; }
  bool has_factors() const { return !u_.empty(); }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

  /// beta_mn = beta_ml * beta_ln for all m, n, l (beta_mm = 1), i.e. a
  /// rank-one matrix with unit diagonal. For N = 2 this is beta1 * beta2 = 1.
  bool is_balanced(double tol = 1e-12) const;
  /// Invariant breaches, empty when valid.
  std::vector<std::string> violations() const;

  friend bool operator==(const StrengthConfig&, const StrengthConfig&) = default;

 private:
  std::vector<std::vector<double>> matrix_;
  std::vector<double> u_;
  std::vector<double> v_;
};

using TranslatorSet = std::map<std::pair<LangId, LangId>, StochasticKernel>;
/// One kernel per language; index is the language ID.
using PolicySet = std::vector<StochasticKernel>;

/// A complete synthetic multilingual world.
struct Scenario {
  std::uint64_t seed = 0;
  std::vector<LanguageSpace> spaces;
  Alignment alignment;
  /// ref[m] covers the prompts of language m.
  PolicySet ref;
  TranslatorSet translators;
  /// priors[m] is a distribution over language m's prompts.
  std::vector<LogDist> priors;
  StrengthConfig strengths;

  std::size_t language_count() const { return spaces.size(); }
  const LanguageSpace& space(LangId m) const;
  const StochasticKernel& translator(LangId from, LangId to) const;
  /// Language whose prompt list contains `prompt`.
  std::optional<LangId> language_of_prompt(Id prompt) const;
  /// Gold candidates of language m keyed by prompt.
  std::map<Id, Id> gold(LangId m) const;
  /// (prompt in a, prompt in b) for every aligned tuple.
  std::vector<std::pair<Id, Id>> aligned_prompts(LangId a, LangId b) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Every invariant breach, each naming the object and the rule. Empty iff the
/// scenario is well formed.
std::vector<std::string> validate(const Scenario& s);

/// Throws ValidationError listing every violation.
void require_valid(const Scenario& s);

struct TranslatorMode {
  /// 0 gives bijective translators; otherwise (1 - leak) * bijection + leak * uniform.
  double leak = 0.0;

  bool bijective() const { return leak == 0.0; }
  static TranslatorMode parse(const std::string& text);
  std::string to_string() const;
};

struct GeneratorConfig {
  int n_langs = 2;
  int n_prompts = 8;
  int n_candidates = 4;
  /// When set, each aligned prompt gets a candidate count drawn uniformly from
  /// [min_candidates, n_candidates].
  std::optional<int> min_candidates;
  TranslatorMode translator;
  /// Dirichlet concentration of reference rows; small means sharp rows.
  double alpha = 1.0;
  /// Rank-one strength factors; empty means all ones.
  std::vector<double> u;
  std::vector<double> v;
  /// Reference rows of every language are relabelings of a single draw, which
  /// makes the reference exactly consistent under bijective translators.
  bool coupled_ref = false;
  std::uint64_t seed = 0;
};

/// Deterministic in `config`. Throws DomainError on an invalid config.
Scenario generate(const GeneratorConfig& config);

/// The 2-language, 4-prompt, 4-candidate bijective configuration used by the
/// golden pipeline and the optimizer benchmarks.
GeneratorConfig benchmark_config();

/// max over distinct (m, n, l) and strings s of L_n of
/// TV((tau_m^l # tau_n^m)(.|s), tau_n^l(.|s)). Zero when translators satisfy
/// the cocycle identity.
double cocycle_defect(const Scenario& s);

}  // namespace clc
