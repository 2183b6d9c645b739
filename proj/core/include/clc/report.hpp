#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clc/consistency.hpp"
#include "clc/metrics.hpp"
#include "clc/scenario.hpp"

namespace clc {

struct PairMetrics {
  LangId lang_a = 0;
  LangId lang_b = 1;
  /// Mean of per_prompt.
  double rankc = 0.0;
  /// One value per aligned prompt tuple, in alignment order.
  std::vector<double> per_prompt;
  /// (prompt in a, prompt in b), parallel to per_prompt.
  std::vector<std::pair<Id, Id>> prompts;
  double jaccard = 1.0;
};

struct LanguageMetrics {
  LangId lang = 0;
  /// Absent when some prompt has no gold candidate.
  std::optional<double> accuracy;
  EntropyStats entropy;
  /// Argmax changes relative to the reference model.
  double changed_fraction = 0.0;
};

/// Everything `eval` reports about one policy on one scenario.
struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string method;
  std::size_t languages = 0;
  /// Mean RankC over unordered language pairs.
  double clc_all = 0.0;
  std::vector<PairMetrics> pairs;
  std::vector<LanguageMetrics> per_language;
  /// Forward-KL temperature search at consistency_eps, per aligned pair.
  std::vector<ConsistencyReport> consistency;
  double consistency_eps = 1e-3;
  double consistent_fraction = 0.0;
};

MetricsReport evaluate(const Scenario& s, const PolicySet& pi, std::string scenario_name,
                       std::string method, double consistency_eps = 1e-3);

std::string metrics_to_json(const MetricsReport& r);
/// Long format: version,scope,lang_a,lang_b,prompt_a,prompt_b,metric,value.
std::string metrics_to_csv(const MetricsReport& r);

/// One row of the aggregate report.
struct ReportRow {
  std::string scenario;
  std::string method;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Flattens a metrics JSON document into aggregate rows. Throws
/// UnsupportedVersionError for any version other than "1" and ParseError for
/// anything that is not a metrics document.
std::vector<ReportRow> report_rows(std::string_view metrics_json);

/// Header: scenario,method,metric,value,seed
std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace clc
