#include "clc/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clc/error.hpp"

namespace clc {

using nlohmann::json;

namespace {

// Field-path aware accessors so parse errors name what was wrong.
class Field {
 public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Field at(const char* key) const {
    if (!j_.is_object() || !j_.contains(key)) fail("missing field '" + std::string(key) + "'");
    return Field(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  Field at(std::size_t i) const { return Field(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size_of_array() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  template <typename T>
  T get() const {
    try {
      return j_.get<T>();
    } catch (const json::exception& e) {
      fail(std::string("wrong type: ") + e.what());
    }
  }

  template <typename T>
  std::vector<T> get_vector() const {
    std::vector<T> out(size_of_array());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).get<T>();
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("field '" + (path_.empty() ? std::string("<root>") : path_) + "': " + what);
  }

 private:
  const json& j_;
  std::string path_;
};

json dist_to_json(const LogDist& d) {
  json j;
  j["support"] = std::vector<Id>(d.support().begin(), d.support().end());
  j["probs"] = d.probs();
  j["logp"] = std::vector<double>(d.logp().begin(), d.logp().end());
  return j;
}

LogDist dist_from_json(const Field& f, const std::vector<Id>* default_support) {
  std::vector<Id> support;
  if (f.has("support")) {
    support = f.at("support").get_vector<Id>();
  } else if (default_support) {
    support = *default_support;
  } else {
    f.fail("missing field 'support'");
  }
  try {
    if (f.has("logp")) {
      auto lp = f.at("logp").get_vector<double>();
      if (lp.size() != support.size()) f.fail("logp and support differ in length");
      return LogDist::from_normalized_log(std::move(support), std::move(lp));
    }
    auto pr = f.at("probs").get_vector<double>();
    if (pr.size() != support.size()) f.fail("probs and support differ in length");
    return LogDist::from_probs(std::move(support), std::move(pr));
  } catch (const DomainError& e) {
    throw ValidationError("field '" + f.path() + "': " + e.what());
  } catch (const StructuralError& e) {
    throw ValidationError("field '" + f.path() + "': " + e.what());
  }
}

json kernel_rows_to_json(const StochasticKernel& k, const char* key) {
  json rows = json::array();
  for (const auto& [x, d] : k.rows()) {
    json r = dist_to_json(d);
    r[key] = x;
    rows.push_back(std::move(r));
  }
  return rows;
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

void check_version(const Field& root) {
  auto v = root.at("version");
  if (!v.value().is_string()) v.fail("expected a string");
  auto s = v.get<std::string>();
  if (s != kSchemaVersion) {
    throw UnsupportedVersionError("unsupported schema version \"" + s + "\", expected \"" +
                                  std::string(kSchemaVersion) + "\"");
  }
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = kSchemaVersion;
  j["seed"] = s.seed;

  json langs = json::array();
  for (const auto& sp : s.spaces) {
    json prompts = json::array();
    for (Id p : sp.prompts) prompts.push_back({{"id", p}, {"candidates", sp.candidates_of(p)}});
    langs.push_back({{"id", sp.id}, {"prompts", std::move(prompts)}});
  }
  j["languages"] = std::move(langs);

  json pairs = json::array();
  json cpairs = json::array();
  json gold = json::array();
  for (const auto& t : s.alignment.tuples()) {
    pairs.push_back(t.prompts);
    cpairs.push_back(t.candidates);
    gold.push_back(t.gold ? json(*t.gold) : json(nullptr));
  }
  j["alignment"] = {{"prompt_pairs", pairs}, {"candidate_pairs", cpairs}, {"gold", gold}};

  json refs = json::array();
  for (std::size_t m = 0; m < s.ref.size(); ++m) {
    refs.push_back({{"lang", m}, {"rows", kernel_rows_to_json(s.ref[m], "prompt")}});
  }
  j["ref_kernels"] = std::move(refs);

  json trs = json::array();
  for (const auto& [key, k] : s.translators) {
    trs.push_back({{"from", key.first}, {"to", key.second}, {"rows", kernel_rows_to_json(k, "source")}});
  }
  j["translators"] = std::move(trs);

  json priors = json::array();
  for (std::size_t m = 0; m < s.priors.size(); ++m) {
    json p = dist_to_json(s.priors[m]);
    p["lang"] = m;
    priors.push_back(std::move(p));
  }
  j["priors"] = std::move(priors);

  json st;
  if (s.strengths.has_factors()) {
    st["u"] = s.strengths.u();
    st["v"] = s.strengths.v();
  }
  st["matrix"] = s.strengths.matrix();
  j["strengths"] = std::move(st);
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(std::string_view text) {
  const json doc = parse_document(text);
  const Field root(doc, "");
  check_version(root);

  Scenario s;
  s.seed = root.at("seed").get<std::uint64_t>();

  auto langs = root.at("languages");
  for (std::size_t m = 0; m < langs.size_of_array(); ++m) {
    auto lf = langs.at(m);
    LanguageSpace sp;
    sp.id = lf.at("id").get<LangId>();
    auto prompts = lf.at("prompts");
    for (std::size_t i = 0; i < prompts.size_of_array(); ++i) {
      auto pf = prompts.at(i);
      Id p = pf.at("id").get<Id>();
      sp.prompts.push_back(p);
      if (!sp.candidates.emplace(p, pf.at("candidates").get_vector<Id>()).second) {
        pf.fail("duplicate prompt ID");
      }
    }
    s.spaces.push_back(std::move(sp));
  }

  auto al = root.at("alignment");
  auto pairs = al.at("prompt_pairs");
  auto cpairs = al.at("candidate_pairs");
  const std::size_t nt = pairs.size_of_array();
  if (cpairs.size_of_array() != nt) cpairs.fail("expected one entry per prompt tuple");
  std::vector<PromptTuple> tuples(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    tuples[t].prompts = pairs.at(t).get_vector<Id>();
    auto cf = cpairs.at(t);
    for (std::size_t k = 0; k < cf.size_of_array(); ++k) {
      tuples[t].candidates.push_back(cf.at(k).get_vector<Id>());
    }
  }
  if (al.has("gold")) {
    auto gf = al.at("gold");
    if (gf.size_of_array() != nt) gf.fail("expected one entry per prompt tuple");
    for (std::size_t t = 0; t < nt; ++t) {
      if (!gf.at(t).value().is_null()) tuples[t].gold = gf.at(t).get<std::size_t>();
    }
  }
  s.alignment = Alignment(std::move(tuples));

  auto refs = root.at("ref_kernels");
  for (std::size_t i = 0; i < refs.size_of_array(); ++i) {
    auto kf = refs.at(i);
    const auto lang = kf.at("lang").get<LangId>();
    if (lang != static_cast<LangId>(i)) kf.fail("ref kernels must be listed in language order");
    const LanguageSpace* sp = lang >= 0 && static_cast<std::size_t>(lang) < s.spaces.size()
                                  ? &s.spaces[static_cast<std::size_t>(lang)]
                                  : nullptr;
    std::map<Id, LogDist> rows;
    auto rf = kf.at("rows");
    for (std::size_t r = 0; r < rf.size_of_array(); ++r) {
      auto row = rf.at(r);
      Id p = row.at("prompt").get<Id>();
      const std::vector<Id>* cands = nullptr;
      if (sp && sp->has_prompt(p)) cands = &sp->candidates_of(p);
      rows.emplace(p, dist_from_json(row, cands));
    }
    s.ref.emplace_back(lang, lang, std::move(rows));
  }

  auto trs = root.at("translators");
  for (std::size_t i = 0; i < trs.size_of_array(); ++i) {
    auto kf = trs.at(i);
    const auto from = kf.at("from").get<LangId>();
    const auto to = kf.at("to").get<LangId>();
    std::map<Id, LogDist> rows;
    auto rf = kf.at("rows");
    for (std::size_t r = 0; r < rf.size_of_array(); ++r) {
      auto row = rf.at(r);
      rows.emplace(row.at("source").get<Id>(), dist_from_json(row, nullptr));
    }
    if (!s.translators.emplace(std::pair{from, to}, StochasticKernel(from, to, std::move(rows))).second) {
      kf.fail("duplicate translator");
    }
  }

  auto priors = root.at("priors");
  for (std::size_t i = 0; i < priors.size_of_array(); ++i) {
    auto pf = priors.at(i);
    if (pf.at("lang").get<LangId>() != static_cast<LangId>(i)) {
      pf.fail("priors must be listed in language order");
    }
    const std::vector<Id>* prompts = i < s.spaces.size() ? &s.spaces[i].prompts : nullptr;
    s.priors.push_back(dist_from_json(pf, prompts));
  }

  auto st = root.at("strengths");
  try {
    if (st.has("u") || st.has("v")) {
      s.strengths = StrengthConfig::rank_one(st.at("u").get_vector<double>(),
                                             st.at("v").get_vector<double>());
      if (st.has("matrix")) {
        auto mf = st.at("matrix");
        const auto& expect = s.strengths.matrix();
        if (mf.size_of_array() != expect.size()) mf.fail("size disagrees with u and v");
        for (std::size_t m = 0; m < expect.size(); ++m) {
          auto row = mf.at(m).get_vector<double>();
          if (row.size() != expect.size()) mf.at(m).fail("size disagrees with u and v");
          for (std::size_t n = 0; n < expect.size(); ++n) {
            if (m != n && std::abs(row[n] - expect[m][n]) > 1e-12 * std::abs(expect[m][n])) {
              mf.at(m).fail("disagrees with u[m] * v[n]");
            }
          }
        }
      }
    } else {
      auto mf = st.at("matrix");
      std::vector<std::vector<double>> beta;
      for (std::size_t m = 0; m < mf.size_of_array(); ++m) beta.push_back(mf.at(m).get_vector<double>());
      s.strengths = StrengthConfig::from_matrix(std::move(beta));
    }
  } catch (const DomainError& e) {
    st.fail(e.what());
  }

  require_valid(s);
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  write_text_file(path, scenario_to_json(s));
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_text_file(path));
}

std::string policy_to_json(const PolicySet& policy, std::string_view method) {
  json j;
  j["version"] = kSchemaVersion;
  j["kind"] = "policy";
  j["method"] = method;
  json langs = json::array();
  for (const auto& k : policy) {
    langs.push_back({{"lang", k.domain()}, {"rows", kernel_rows_to_json(k, "prompt")}});
  }
  j["languages"] = std::move(langs);
  return j.dump(2) + "\n";
}

PolicyFile policy_from_json(std::string_view text) {
  const json doc = parse_document(text);
  const Field root(doc, "");
  check_version(root);
  if (root.at("kind").get<std::string>() != "policy") root.at("kind").fail("expected \"policy\"");
  PolicyFile out;
  out.method = root.at("method").get<std::string>();
  auto langs = root.at("languages");
  for (std::size_t i = 0; i < langs.size_of_array(); ++i) {
    auto lf = langs.at(i);
    const auto lang = lf.at("lang").get<LangId>();
    if (lang != static_cast<LangId>(i)) lf.fail("languages must be listed in order");
    std::map<Id, LogDist> rows;
    auto rf = lf.at("rows");
    for (std::size_t r = 0; r < rf.size_of_array(); ++r) {
      auto row = rf.at(r);
      rows.emplace(row.at("prompt").get<Id>(), dist_from_json(row, nullptr));
    }
    out.policy.emplace_back(lang, lang, std::move(rows));
  }
  return out;
}

void save_policy(const PolicySet& policy, std::string_view method,
                 const std::filesystem::path& path) {
  write_text_file(path, policy_to_json(policy, method));
}

PolicyFile load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_text_file(path));
}

}  // namespace clc
