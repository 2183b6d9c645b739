#include "clc/report.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "clc/error.hpp"
#include "clc/scenario_io.hpp"

namespace clc {

using nlohmann::json;

namespace {

json summary_json(const std::optional<EntrySummary>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"std", s->std}, {"count", s->count}};
}

json divergence_json(const Divergence& d) {
  return d.is_infinite() ? json("inf") : json(d.value());
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV cells here are identifiers and numbers; quote anything else.
std::string cell(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

MetricsReport evaluate(const Scenario& s, const PolicySet& pi, std::string scenario_name,
                       std::string method, double consistency_eps) {
  if (pi.size() != s.language_count()) {
    throw StructuralError("policy covers " + std::to_string(pi.size()) + " languages, scenario has " +
                          std::to_string(s.language_count()));
  }
  MetricsReport r;
  r.scenario = std::move(scenario_name);
  r.seed = s.seed;
  r.method = std::move(method);
  r.languages = s.language_count();
  r.consistency_eps = consistency_eps;

  const auto n = static_cast<LangId>(s.language_count());
  std::vector<std::map<Id, Id>> gold;
  for (LangId m = 0; m < n; ++m) gold.push_back(s.gold(m));

  for (LangId a = 0; a < n; ++a) {
    for (LangId b = a + 1; b < n; ++b) {
      PairMetrics p;
      p.lang_a = a;
      p.lang_b = b;
      const auto& tuples = s.alignment.tuples();
      for (std::size_t t = 0; t < tuples.size(); ++t) {
        const Id xa = tuples[t].prompts.at(static_cast<std::size_t>(a));
        const Id xb = tuples[t].prompts.at(static_cast<std::size_t>(b));
        p.prompts.emplace_back(xa, xb);
        p.per_prompt.push_back(rankc(pi[static_cast<std::size_t>(a)].row(xa),
                                     pi[static_cast<std::size_t>(b)].row(xb),
                                     s.alignment.candidate_map(t, a, b)));
        r.consistency.push_back(check_consistency(pi, s.translators, a, b, xa, xb,
                                                  {DivergenceKind::kForwardKl}, consistency_eps));
      }
      if (!p.per_prompt.empty()) {
        p.rankc = std::accumulate(p.per_prompt.begin(), p.per_prompt.end(), 0.0) /
                  static_cast<double>(p.per_prompt.size());
      }
      p.jaccard = jaccard_correct_overlap(pi[static_cast<std::size_t>(a)],
                                          pi[static_cast<std::size_t>(b)],
                                          gold[static_cast<std::size_t>(a)],
                                          gold[static_cast<std::size_t>(b)], s.alignment);
      r.pairs.push_back(std::move(p));
    }
  }
  if (!r.pairs.empty()) {
    double sum = 0.0;
    for (const auto& p : r.pairs) sum += p.rankc;
    r.clc_all = sum / static_cast<double>(r.pairs.size());
  }

  for (LangId m = 0; m < n; ++m) {
    const auto& k = pi[static_cast<std::size_t>(m)];
    const auto& g = gold[static_cast<std::size_t>(m)];
    LanguageMetrics lm;
    lm.lang = m;
    bool full_gold = true;
    for (const auto& [x, row] : k.rows()) full_gold = full_gold && g.contains(x);
    if (full_gold) lm.accuracy = accuracy(k, g);
    lm.entropy = entropy_stats(k, g);
    lm.changed_fraction = changed_fraction(s.ref[static_cast<std::size_t>(m)], k);
    r.per_language.push_back(lm);
  }

  std::size_t ok = 0;
  for (const auto& c : r.consistency) ok += c.satisfied ? 1 : 0;
  r.consistent_fraction = r.consistency.empty()
                              ? 1.0
                              : static_cast<double>(ok) / static_cast<double>(r.consistency.size());
  return r;
}

std::string metrics_to_json(const MetricsReport& r) {
  json j;
  j["version"] = kSchemaVersion;
  j["kind"] = "metrics";
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["languages"] = r.languages;
  j["clc_all"] = r.clc_all;

  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json per = json::array();
    for (std::size_t i = 0; i < p.per_prompt.size(); ++i) {
      per.push_back({{"prompt_a", p.prompts[i].first},
                     {"prompt_b", p.prompts[i].second},
                     {"rankc", p.per_prompt[i]}});
    }
    pairs.push_back({{"lang_a", p.lang_a},
                     {"lang_b", p.lang_b},
                     {"rankc", p.rankc},
                     {"jaccard", p.jaccard},
                     {"per_prompt", std::move(per)}});
  }
  j["pairs"] = std::move(pairs);

  json langs = json::array();
  for (const auto& l : r.per_language) {
    langs.push_back({{"lang", l.lang},
                     {"accuracy", l.accuracy ? json(*l.accuracy) : json(nullptr)},
                     {"changed_fraction", l.changed_fraction},
                     {"entropy",
                      {{"correct", summary_json(l.entropy.correct)},
                       {"incorrect", summary_json(l.entropy.incorrect)}}}});
  }
  j["per_language"] = std::move(langs);

  json cons = json::array();
  for (const auto& c : r.consistency) {
    cons.push_back({{"lang_a", c.lang_a},
                    {"lang_b", c.lang_b},
                    {"prompt_a", c.prompt_a},
                    {"prompt_b", c.prompt_b},
                    {"divergence_a", divergence_json(c.direction_a.divergence)},
                    {"divergence_b", divergence_json(c.direction_b.divergence)},
                    {"best_t_a", c.direction_a.temperature},
                    {"best_t_b", c.direction_b.temperature},
                    {"divergence_at_best_t", divergence_json(c.divergence_at_best_t)},
                    {"satisfied", c.satisfied}});
  }
  j["consistency"] = {{"divergence", "forward-kl"},
                      {"epsilon", r.consistency_eps},
                      {"consistent_fraction", r.consistent_fraction},
                      {"pairs", std::move(cons)}};
  return j.dump(2) + "\n";
}

std::string metrics_to_csv(const MetricsReport& r) {
  std::string out = "version,scope,lang_a,lang_b,prompt_a,prompt_b,metric,value\n";
  auto row = [&](std::string_view scope, std::string la, std::string lb, std::string pa,
                 std::string pb, std::string_view metric, double v) {
    out += std::string(kSchemaVersion) + "," + std::string(scope) + "," + la + "," + lb + "," + pa +
           "," + pb + "," + std::string(metric) + "," + fmt(v) + "\n";
  };
  const auto str = [](auto v) { return std::to_string(v); };
  row("all", "", "", "", "", "clc_all", r.clc_all);
  row("all", "", "", "", "", "consistent_fraction", r.consistent_fraction);
  for (const auto& p : r.pairs) {
    row("pair", str(p.lang_a), str(p.lang_b), "", "", "rankc", p.rankc);
    row("pair", str(p.lang_a), str(p.lang_b), "", "", "jaccard", p.jaccard);
    for (std::size_t i = 0; i < p.per_prompt.size(); ++i) {
      row("prompt", str(p.lang_a), str(p.lang_b), str(p.prompts[i].first),
          str(p.prompts[i].second), "rankc", p.per_prompt[i]);
    }
  }
  for (const auto& c : r.consistency) {
    row("prompt", str(c.lang_a), str(c.lang_b), str(c.prompt_a), str(c.prompt_b),
        "consistency_divergence",
        c.divergence_at_best_t.value_or(std::numeric_limits<double>::infinity()));
    row("prompt", str(c.lang_a), str(c.lang_b), str(c.prompt_a), str(c.prompt_b),
        "consistency_satisfied", c.satisfied ? 1.0 : 0.0);
  }
  for (const auto& l : r.per_language) {
    const std::string m = str(l.lang);
    if (l.accuracy) row("language", m, "", "", "", "accuracy", *l.accuracy);
    row("language", m, "", "", "", "changed_fraction", l.changed_fraction);
    if (l.entropy.correct) {
      row("language", m, "", "", "", "entropy_correct_mean", l.entropy.correct->mean);
      row("language", m, "", "", "", "entropy_correct_std", l.entropy.correct->std);
    }
    if (l.entropy.incorrect) {
      row("language", m, "", "", "", "entropy_incorrect_mean", l.entropy.incorrect->mean);
      row("language", m, "", "", "", "entropy_incorrect_std", l.entropy.incorrect->std);
    }
  }
  return out;
}

std::vector<ReportRow> report_rows(std::string_view metrics_json) {
  json j;
  try {
    j = json::parse(metrics_json.begin(), metrics_json.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_string()) {
    throw ParseError("field 'version': missing or not a string");
  }
  if (j["version"] != kSchemaVersion) {
    throw UnsupportedVersionError("unsupported schema version \"" +
                                  j["version"].get<std::string>() + "\", expected \"" +
                                  std::string(kSchemaVersion) + "\"");
  }
  if (j.value("kind", "") != "metrics") throw ParseError("field 'kind': expected \"metrics\"");

  std::vector<ReportRow> rows;
  try {
    const std::string scenario = j.at("scenario").get<std::string>();
    const std::string method = j.at("method").get<std::string>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    auto add = [&](std::string metric, double v) {
      rows.push_back({scenario, method, std::move(metric), v, seed});
    };
    add("clc_all", j.at("clc_all").get<double>());
    add("consistent_fraction", j.at("consistency").at("consistent_fraction").get<double>());
    for (const auto& p : j.at("pairs")) {
      const std::string tag =
          std::to_string(p.at("lang_a").get<int>()) + "-" + std::to_string(p.at("lang_b").get<int>());
      add("rankc/" + tag, p.at("rankc").get<double>());
      add("jaccard/" + tag, p.at("jaccard").get<double>());
    }
    for (const auto& l : j.at("per_language")) {
      const std::string tag = std::to_string(l.at("lang").get<int>());
      if (!l.at("accuracy").is_null()) add("accuracy/" + tag, l.at("accuracy").get<double>());
      add("changed_fraction/" + tag, l.at("changed_fraction").get<double>());
      for (const char* part : {"correct", "incorrect"}) {
        const auto& e = l.at("entropy").at(part);
        if (e.is_null()) continue;
        add(std::string("entropy_") + part + "_mean/" + tag, e.at("mean").get<double>());
        add(std::string("entropy_") + part + "_std/" + tag, e.at("std").get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed metrics document: ") + e.what());
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "scenario,method,metric,value,seed\n";
  for (const auto& r : rows) {
    out += cell(r.scenario) + "," + cell(r.method) + "," + cell(r.metric) + "," + fmt(r.value) +
           "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

}  // namespace clc
