#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "clc/scenario.hpp"

namespace clc {

/// Current scenario/policy/metrics schema version.
inline constexpr std::string_view kSchemaVersion = "1";

/// Scenario file: one JSON document.
///
///   version      "1"
///   seed         integer
///   languages    [{id, prompts: [{id, candidates: [id...]}]}]
///   alignment    {prompt_pairs: [[id per language]...],
///                 candidate_pairs: [[[id per language]...] per prompt tuple],
///                 gold: [candidate tuple index or null per prompt tuple]}
///   ref_kernels  [{lang, rows: [{prompt, support, probs, logp}]}]
///   translators  [{from, to, rows: [{source, support, probs, logp}]}]
///   priors       [{lang, support, probs, logp}]
///   strengths    {u, v, matrix}
///
/// `logp` is the exact stored value; `probs` is informational and is only
/// read when `logp` is absent, in which case it must sum to 1 within 1e-9.
/// `support` defaults to the prompt's candidate list for reference rows.
std::string scenario_to_json(const Scenario& s);

/// Throws ParseError (naming the field), UnsupportedVersionError, or
/// ValidationError (bad probability rows or scenario invariants).
Scenario scenario_from_json(std::string_view text);

void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/// A policy written by `fit` or `eval`: one kernel per language plus the
/// method that produced it.
struct PolicyFile {
  std::string method;
  PolicySet policy;
};

std::string policy_to_json(const PolicySet& policy, std::string_view method);
PolicyFile policy_from_json(std::string_view text);
void save_policy(const PolicySet& policy, std::string_view method,
                 const std::filesystem::path& path);
PolicyFile load_policy(const std::filesystem::path& path);

/// Whole-file helpers shared by the CLI.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace clc
