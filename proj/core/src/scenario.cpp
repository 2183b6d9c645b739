#include "clc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "clc/error.hpp"
#include "clc/rng.hpp"

namespace clc {
namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// LanguageSpace / Alignment

const std::vector<Id>& LanguageSpace::candidates_of(Id prompt) const {
  auto it = candidates.find(prompt);
  if (it == candidates.end()) {
    throw StructuralError(cat("language ", id, " has no prompt ", prompt));
  }
  return it->second;
}

std::vector<Id> LanguageSpace::strings() const {
  std::vector<Id> out = prompts;
  for (Id p : prompts) {
    auto it = candidates.find(p);
    if (it != candidates.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

Alignment::Alignment(std::vector<PromptTuple> tuples) : tuples_(std::move(tuples)) {
  for (std::size_t t = 0; t < tuples_.size(); ++t) {
    const auto& tup = tuples_[t];
    for (std::size_t m = 0; m < tup.prompts.size(); ++m) {
      index_.try_emplace(tup.prompts[m], Slot{t, std::nullopt, static_cast<LangId>(m)});
    }
    for (std::size_t k = 0; k < tup.candidates.size(); ++k) {
      for (std::size_t m = 0; m < tup.candidates[k].size(); ++m) {
        index_.try_emplace(tup.candidates[k][m], Slot{t, k, static_cast<LangId>(m)});
      }
    }
  }
}

std::optional<std::size_t> Alignment::tuple_of(Id prompt) const {
  auto it = index_.find(prompt);
  if (it == index_.end() || it->second.candidate) return std::nullopt;
  return it->second.tuple;
}

Id Alignment::map_string(Id id, LangId to) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw StructuralError(cat("ID ", id, " is not aligned"));
  const auto& tup = tuples_[it->second.tuple];
  const auto lang = static_cast<std::size_t>(to);
  if (it->second.candidate) {
    const auto& row = tup.candidates[*it->second.candidate];
    if (lang >= row.size()) throw StructuralError(cat("no language ", to, " in alignment"));
    return row[lang];
  }
  if (lang >= tup.prompts.size()) throw StructuralError(cat("no language ", to, " in alignment"));
  return tup.prompts[lang];
}

std::map<Id, Id> Alignment::candidate_map(std::size_t tuple, LangId from, LangId to) const {
  if (tuple >= tuples_.size()) throw StructuralError(cat("no aligned tuple ", tuple));
  std::map<Id, Id> out;
  for (const auto& row : tuples_[tuple].candidates) {
    out.emplace(row.at(static_cast<std::size_t>(from)), row.at(static_cast<std::size_t>(to)));
  }
  return out;
}

std::optional<Id> Alignment::gold_of(Id prompt) const {
  auto it = index_.find(prompt);
  if (it == index_.end() || it->second.candidate) return std::nullopt;
  const auto& tup = tuples_[it->second.tuple];
  if (!tup.gold || *tup.gold >= tup.candidates.size()) return std::nullopt;
  return tup.candidates[*tup.gold].at(static_cast<std::size_t>(it->second.lang));
}

// ---------------------------------------------------------------------------
// StrengthConfig

StrengthConfig StrengthConfig::rank_one(std::vector<double> u, std::vector<double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw DomainError("strength factors u and v must be non-empty and of equal length");
  }
  StrengthConfig s;
  s.matrix_.assign(u.size(), std::vector<double>(u.size(), 0.0));
  for (std::size_t m = 0; m < u.size(); ++m) {
    for (std::size_t n = 0; n < u.size(); ++n) s.matrix_[m][n] = u[m] * v[n];
  }
  s.u_ = std::move(u);
  s.v_ = std::move(v);
  return s;
}

StrengthConfig StrengthConfig::from_matrix(std::vector<std::vector<double>> beta) {
  for (const auto& row : beta) {
    if (row.size() != beta.size()) throw DomainError("strength matrix must be square");
  }
  if (beta.empty()) throw DomainError("strength matrix must be non-empty");
  for (std::size_t m = 0; m < beta.size(); ++m) beta[m][m] = 1.0;
  StrengthConfig s;
  s.matrix_ = std::move(beta);
  return s;
}

StrengthConfig StrengthConfig::bilingual(double beta1, double beta2) {
  StrengthConfig s = from_matrix({{1.0, beta1}, {beta2, 1.0}});
  if (beta1 > 0.0 && close_rel(beta1 * beta2, 1.0, 1e-12)) {
    s.u_ = {beta1, 1.0};
    s.v_ = {1.0 / beta1, 1.0};
  }
  return s;
}

double StrengthConfig::beta(LangId m, LangId n) const {
  const auto mi = static_cast<std::size_t>(m);
  const auto ni = static_cast<std::size_t>(n);
  if (mi >= matrix_.size() || ni >= matrix_.size()) {
    throw StructuralError(cat("no strength for language pair ", m, ",", n));
  }
  return m == n ? 1.0 : matrix_[mi][ni];
}

bool StrengthConfig::is_balanced(double tol) const {
  const auto n = static_cast<LangId>(matrix_.size());
  for (LangId a = 0; a < n; ++a) {
    for (LangId b = 0; b < n; ++b) {
      for (LangId l = 0; l < n; ++l) {
        if (!close_rel(beta(a, b), beta(a, l) * beta(l, b), tol)) return false;
      }
    }
  }
  return true;
}

std::vector<std::string> StrengthConfig::violations() const {
  std::vector<std::string> out;
  for (std::size_t m = 0; m < matrix_.size(); ++m) {
    for (std::size_t n = 0; n < matrix_.size(); ++n) {
      if (m != n && !(matrix_[m][n] > 0.0 && std::isfinite(matrix_[m][n]))) {
        out.push_back(cat("strengths: beta[", m, "][", n, "] must be positive"));
      }
    }
  }
  if (has_factors()) {
    for (std::size_t m = 0; m < u_.size(); ++m) {
      if (!(u_[m] > 0.0) || !(v_[m] > 0.0)) {
        out.push_back(cat("strengths: u[", m, "] and v[", m, "] must be positive"));
      } else if (!close_rel(u_[m] * v_[m], 1.0, 1e-12)) {
        out.push_back(cat("strengths: u[", m, "] * v[", m, "] = ", u_[m] * v_[m], ", must be 1"));
      }
      for (std::size_t n = 0; n < u_.size(); ++n) {
        if (m != n && !close_rel(matrix_[m][n], u_[m] * v_[n], 1e-12)) {
          out.push_back(cat("strengths: beta[", m, "][", n, "] disagrees with u[m] * v[n]"));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario

const LanguageSpace& Scenario::space(LangId m) const {
  const auto i = static_cast<std::size_t>(m);
  if (m < 0 || i >= spaces.size()) throw StructuralError(cat("no language ", m));
  return spaces[i];
}

const StochasticKernel& Scenario::translator(LangId from, LangId to) const {
  auto it = translators.find({from, to});
  if (it == translators.end()) throw StructuralError(cat("no translator ", from, "->", to));
  return it->second;
}

std::optional<LangId> Scenario::language_of_prompt(Id prompt) const {
  for (const auto& sp : spaces) {
    if (sp.has_prompt(prompt)) return sp.id;
  }
  return std::nullopt;
}

std::map<Id, Id> Scenario::gold(LangId m) const {
  std::map<Id, Id> out;
  for (Id p : space(m).prompts) {
    if (auto g = alignment.gold_of(p)) out.emplace(p, *g);
  }
  return out;
}

std::vector<std::pair<Id, Id>> Scenario::aligned_prompts(LangId a, LangId b) const {
  std::vector<std::pair<Id, Id>> out;
  for (const auto& t : alignment.tuples()) {
    out.emplace_back(t.prompts.at(static_cast<std::size_t>(a)),
                     t.prompts.at(static_cast<std::size_t>(b)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// validate

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> out;
  const std::size_t n = s.spaces.size();
  if (n < 2) out.push_back(cat("scenario: needs at least 2 languages, has ", n));

  std::vector<std::set<Id>> strings(n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto& sp = s.spaces[m];
    if (sp.id != static_cast<LangId>(m)) {
      out.push_back(cat("language[", m, "]: id ", sp.id, " must equal its index"));
    }
    if (sp.prompts.empty()) out.push_back(cat("language ", m, ": no prompts"));
    std::size_t total = 0;
    for (Id p : sp.prompts) {
      auto it = sp.candidates.find(p);
      if (it == sp.candidates.end()) {
        out.push_back(cat("language ", m, ": prompt ", p, " has no candidate list"));
        continue;
      }
      if (it->second.empty()) out.push_back(cat("language ", m, ": prompt ", p, " has no candidates"));
      total += 1 + it->second.size();
    }
    if (sp.candidates.size() != sp.prompts.size()) {
      out.push_back(cat("language ", m, ": candidate lists do not match the prompt list"));
    }
    for (Id id : sp.strings()) strings[m].insert(id);
    if (strings[m].size() != total) {
      out.push_back(cat("language ", m, ": prompt and candidate IDs must be unique"));
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::vector<Id> shared;
      std::set_intersection(strings[a].begin(), strings[a].end(), strings[b].begin(),
                            strings[b].end(), std::back_inserter(shared));
      if (!shared.empty()) {
        out.push_back(cat("languages ", a, " and ", b, ": not disjoint, ", shared.size(),
                          " shared IDs (first ", shared.front(), ")"));
      }
    }
  }
  if (!out.empty()) return out;

  // Alignment.
  std::vector<std::set<Id>> seen(n);
  const auto& tuples = s.alignment.tuples();
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const auto& tup = tuples[t];
    if (tup.prompts.size() != n) {
      out.push_back(cat("alignment[", t, "]: expected ", n, " prompts"));
      continue;
    }
    bool ok = true;
    for (std::size_t m = 0; m < n; ++m) {
      if (!s.spaces[m].has_prompt(tup.prompts[m])) {
        out.push_back(cat("alignment[", t, "]: ", tup.prompts[m], " is not a prompt of language ", m));
        ok = false;
      } else if (!seen[m].insert(tup.prompts[m]).second) {
        out.push_back(cat("alignment[", t, "]: prompt ", tup.prompts[m], " aligned twice"));
      }
    }
    if (!ok) continue;
    for (std::size_t m = 0; m < n; ++m) {
      const auto& cands = s.spaces[m].candidates_of(tup.prompts[m]);
      if (tup.candidates.size() != cands.size()) {
        out.push_back(cat("alignment[", t, "]: ", tup.candidates.size(),
                          " candidate tuples but prompt ", tup.prompts[m], " has ", cands.size()));
        continue;
      }
      std::set<Id> used;
      for (std::size_t k = 0; k < tup.candidates.size(); ++k) {
        if (tup.candidates[k].size() != n) {
          out.push_back(cat("alignment[", t, "].candidates[", k, "]: expected ", n, " IDs"));
          break;
        }
        Id c = tup.candidates[k][m];
        if (std::find(cands.begin(), cands.end(), c) == cands.end() || !used.insert(c).second) {
          out.push_back(cat("alignment[", t, "].candidates[", k, "]: ", c,
                            " is not a distinct candidate of prompt ", tup.prompts[m]));
        }
      }
    }
    if (tup.gold && *tup.gold >= tup.candidates.size()) {
      out.push_back(cat("alignment[", t, "]: gold index out of range"));
    }
  }
  for (std::size_t m = 0; m < n; ++m) {
    if (seen[m].size() != s.spaces[m].prompts.size()) {
      out.push_back(cat("alignment: not every prompt of language ", m, " is aligned"));
    }
  }

  // Reference kernels.
  if (s.ref.size() != n) {
    out.push_back(cat("ref: expected ", n, " kernels, found ", s.ref.size()));
  } else {
    for (std::size_t m = 0; m < n; ++m) {
      const auto& k = s.ref[m];
      const auto lang = static_cast<LangId>(m);
      if (k.domain() != lang || k.codomain() != lang) {
        out.push_back(cat("ref[", m, "]: must map language ", m, " to itself"));
      }
      if (k.rows().size() != s.spaces[m].prompts.size()) {
        out.push_back(cat("ref[", m, "]: expected one row per prompt"));
      }
      for (Id p : s.spaces[m].prompts) {
        if (!k.has_row(p)) {
          out.push_back(cat("ref[", m, "]: missing row for prompt ", p));
          continue;
        }
        std::vector<Id> want = s.spaces[m].candidates_of(p);
        std::sort(want.begin(), want.end());
        auto sup = k.row(p).support();
        if (!std::equal(want.begin(), want.end(), sup.begin(), sup.end())) {
          out.push_back(cat("ref[", m, "]: row for prompt ", p, " is not over its candidates"));
        }
      }
    }
  }

  // Translators.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      auto it = s.translators.find({static_cast<LangId>(a), static_cast<LangId>(b)});
      if (it == s.translators.end()) {
        out.push_back(cat("translator ", a, "->", b, ": missing"));
        continue;
      }
      const auto& k = it->second;
      if (k.domain() != static_cast<LangId>(a) || k.codomain() != static_cast<LangId>(b)) {
        out.push_back(cat("translator ", a, "->", b, ": domain/codomain mismatch"));
      }
      for (Id x : strings[a]) {
        if (!k.has_row(x)) {
          out.push_back(cat("translator ", a, "->", b, ": missing row for ", x));
          continue;
        }
        for (Id y : k.row(x).support()) {
          if (!strings[b].contains(y)) {
            out.push_back(cat("translator ", a, "->", b, ": row ", x, " leaves language ", b));
            break;
          }
        }
      }
    }
  }

  // Priors.
  if (s.priors.size() != n) {
    out.push_back(cat("priors: expected ", n, ", found ", s.priors.size()));
  } else {
    for (std::size_t m = 0; m < n; ++m) {
      for (Id p : s.priors[m].support()) {
        if (!s.spaces[m].has_prompt(p)) {
          out.push_back(cat("priors[", m, "]: ", p, " is not a prompt of language ", m));
        }
      }
    }
  }

  if (s.strengths.size() != n) {
    out.push_back(cat("strengths: expected ", n, " languages, found ", s.strengths.size()));
  } else {
    auto sv = s.strengths.violations();
    out.insert(out.end(), sv.begin(), sv.end());
  }
  return out;
}

void require_valid(const Scenario& s) {
  auto v = validate(s);
  if (v.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& e : v) msg += "\n  " + e;
  throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// generate

TranslatorMode TranslatorMode::parse(const std::string& text) {
  if (text == "bijective") return {};
  const std::string prefix = "noisy:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double leak = 0.0;
    try {
      leak = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - prefix.size()) {
      throw DomainError("bad translator leak in '" + text + "'");
    }
    if (!(leak >= 0.0 && leak < 1.0)) throw DomainError("translator leak must lie in [0, 1)");
    return {leak};
  }
  throw DomainError("translator must be 'bijective' or 'noisy:<leak>', got '" + text + "'");
}

std::string TranslatorMode::to_string() const {
  if (bijective()) return "bijective";
  std::ostringstream os;
  os.precision(17);
  os << "noisy:" << leak;
  return os.str();
}

namespace {

constexpr Id kLanguageStride = 1'000'000;
constexpr Id kPromptStride = 1'000;

void check_config(const GeneratorConfig& c) {
  if (c.n_langs < 2) throw DomainError("need at least 2 languages");
  if (c.n_prompts < 1 || c.n_prompts >= 1000) throw DomainError("prompt count must lie in [1, 999]");
  if (c.n_candidates < 1 || c.n_candidates >= 1000) {
    throw DomainError("candidate count must lie in [1, 999]");
  }
  if (c.min_candidates && (*c.min_candidates < 1 || *c.min_candidates > c.n_candidates)) {
    throw DomainError("min_candidates must lie in [1, n_candidates]");
  }
  if (!(c.translator.leak >= 0.0 && c.translator.leak < 1.0)) {
    throw DomainError("translator leak must lie in [0, 1)");
  }
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw DomainError("alpha must be positive");
  const auto n = static_cast<std::size_t>(c.n_langs);
  if ((!c.u.empty() && c.u.size() != n) || (!c.v.empty() && c.v.size() != n)) {
    throw DomainError("u and v must have one entry per language");
  }
}

LogDist dirichlet_row(Rng& rng, double alpha, const std::vector<Id>& ids) {
  auto w = rng.dirichlet(alpha, ids.size());
  std::vector<double> lw(w.size());
  std::transform(w.begin(), w.end(), lw.begin(), [](double x) { return std::log(x); });
  return LogDist::normalize(ids, std::move(lw));
}

LogDist leaky_row(Id target, const std::vector<Id>& pool, double leak) {
  if (leak == 0.0) return LogDist::point_mass(target);
  const double spread = leak / static_cast<double>(pool.size());
  std::vector<double> lw(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    lw[i] = std::log(spread + (pool[i] == target ? 1.0 - leak : 0.0));
  }
  return LogDist::normalize(pool, std::move(lw));
}

}  // namespace

Scenario generate(const GeneratorConfig& c) {
  check_config(c);
  Rng rng(c.seed);
  const auto n = static_cast<std::size_t>(c.n_langs);
  const auto np = static_cast<std::size_t>(c.n_prompts);

  std::vector<std::size_t> cand_count(np, static_cast<std::size_t>(c.n_candidates));
  if (c.min_candidates) {
    const auto lo = static_cast<std::size_t>(*c.min_candidates);
    const auto hi = static_cast<std::size_t>(c.n_candidates);
    for (auto& k : cand_count) k = lo + rng.uniform_index(hi - lo + 1);
  }

  // prompt_id[m][t], cand_id[m][t][k]: IDs are shuffled per language so that
  // aligned strings sit at different positions in each language's ordering.
  std::vector<std::vector<Id>> prompt_id(n, std::vector<Id>(np));
  std::vector<std::vector<std::vector<Id>>> cand_id(n, std::vector<std::vector<Id>>(np));
  for (std::size_t m = 0; m < n; ++m) {
    std::vector<Id> slots(np);
    std::iota(slots.begin(), slots.end(), Id{1});
    rng.shuffle(slots);
    const Id base = static_cast<Id>(m + 1) * kLanguageStride;
    for (std::size_t t = 0; t < np; ++t) {
      prompt_id[m][t] = base + slots[t] * kPromptStride;
      std::vector<Id> cs(cand_count[t]);
      std::iota(cs.begin(), cs.end(), Id{1});
      rng.shuffle(cs);
      for (Id& cid : cs) cid += prompt_id[m][t];
      cand_id[m][t] = std::move(cs);
    }
  }

  Scenario s;
  s.seed = c.seed;
  s.spaces.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    auto& sp = s.spaces[m];
    sp.id = static_cast<LangId>(m);
    sp.prompts = prompt_id[m];
    std::sort(sp.prompts.begin(), sp.prompts.end());
    for (std::size_t t = 0; t < np; ++t) {
      auto cs = cand_id[m][t];
      std::sort(cs.begin(), cs.end());
      sp.candidates.emplace(prompt_id[m][t], std::move(cs));
    }
  }

  std::vector<PromptTuple> tuples(np);
  for (std::size_t t = 0; t < np; ++t) {
    auto& tup = tuples[t];
    for (std::size_t m = 0; m < n; ++m) tup.prompts.push_back(prompt_id[m][t]);
    tup.candidates.assign(cand_count[t], std::vector<Id>(n));
    for (std::size_t k = 0; k < cand_count[t]; ++k) {
      for (std::size_t m = 0; m < n; ++m) tup.candidates[k][m] = cand_id[m][t][k];
    }
    tup.gold = rng.uniform_index(cand_count[t]);
  }
  s.alignment = Alignment(std::move(tuples));

  // Reference rows.
  std::vector<std::map<Id, LogDist>> ref_rows(n);
  for (std::size_t t = 0; t < np; ++t) {
    if (c.coupled_ref) {
      LogDist shared = dirichlet_row(rng, c.alpha, cand_id[0][t]);
      for (std::size_t m = 0; m < n; ++m) {
        std::map<Id, Id> relabel;
        for (std::size_t k = 0; k < cand_count[t]; ++k) relabel.emplace(cand_id[0][t][k], cand_id[m][t][k]);
        ref_rows[m].emplace(prompt_id[m][t], shared.relabeled(relabel));
      }
    } else {
      for (std::size_t m = 0; m < n; ++m) {
        ref_rows[m].emplace(prompt_id[m][t], dirichlet_row(rng, c.alpha, cand_id[m][t]));
      }
    }
  }
  for (std::size_t m = 0; m < n; ++m) {
    const auto lang = static_cast<LangId>(m);
    s.ref.emplace_back(lang, lang, std::move(ref_rows[m]));
  }

  // Translators.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      std::vector<Id> prompt_pool = s.spaces[b].prompts;
      std::vector<Id> cand_pool;
      for (const auto& [p, cs] : s.spaces[b].candidates) cand_pool.insert(cand_pool.end(), cs.begin(), cs.end());
      std::sort(cand_pool.begin(), cand_pool.end());
      std::map<Id, LogDist> rows;
      for (std::size_t t = 0; t < np; ++t) {
        rows.emplace(prompt_id[a][t], leaky_row(prompt_id[b][t], prompt_pool, c.translator.leak));
        for (std::size_t k = 0; k < cand_count[t]; ++k) {
          rows.emplace(cand_id[a][t][k], leaky_row(cand_id[b][t][k], cand_pool, c.translator.leak));
        }
      }
      const auto from = static_cast<LangId>(a);
      const auto to = static_cast<LangId>(b);
      s.translators.emplace(std::pair{from, to}, StochasticKernel(from, to, std::move(rows)));
    }
  }

  for (std::size_t m = 0; m < n; ++m) s.priors.push_back(LogDist::uniform(s.spaces[m].prompts));

  std::vector<double> u = c.u.empty() ? std::vector<double>(n, 1.0) : c.u;
  std::vector<double> v = c.v.empty() ? std::vector<double>(n, 1.0) : c.v;
  s.strengths = StrengthConfig::rank_one(std::move(u), std::move(v));
  return s;
}

GeneratorConfig benchmark_config() {
  GeneratorConfig c;
  c.n_langs = 2;
  c.n_prompts = 4;
  c.n_candidates = 4;
  c.alpha = 1.0;
  c.seed = 7;
  return c;
}

double cocycle_defect(const Scenario& s) {
  const auto n = static_cast<LangId>(s.language_count());
  double worst = 0.0;
  for (LangId a = 0; a < n; ++a) {
    for (LangId b = 0; b < n; ++b) {
      for (LangId l = 0; l < n; ++l) {
        if (a == b || b == l || a == l) continue;
        // tau_b^l # tau_a^b against tau_a^l on strings of language a.
        const auto& first = s.translator(a, b);
        const auto& second = s.translator(b, l);
        const auto& direct = s.translator(a, l);
        for (const auto& [x, r] : first.rows()) {
          worst = std::max(worst, total_variation(pushforward(second, r), direct.row(x)));
        }
      }
    }
  }
  return worst;
}

}  // namespace clc
