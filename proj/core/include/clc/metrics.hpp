#pragma once

#include <map>
#include <optional>
#include <vector>

#include "clc/kernel.hpp"
#include "clc/log_dist.hpp"
#include "clc/scenario.hpp"

namespace clc {

/// Candidates of `d` ordered by descending probability, ties by ascending ID.
std::vector<Id> ranking(const LogDist& d);

/// Ranking agreement of two aligned distributions. `candidate_map` sends
/// d1's candidates to d2's. Weights decay as exp(M - j) over ranks j = 1..M,
/// and each rank contributes the top-j overlap fraction.
///
/// Throws StructuralError when the supports differ in size or the map does
/// not cover d1's support with images in d2's support.
double rankc(const LogDist& d1, const LogDist& d2, const std::map<Id, Id>& candidate_map);

/// Fraction of the kernel's prompts whose argmax is the gold candidate.
/// Throws StructuralError when a prompt has no gold entry.
double accuracy(const StochasticKernel& pi, const std::map<Id, Id>& gold);

/// Prompts of `pi` answered correctly.
std::vector<Id> correct_prompts(const StochasticKernel& pi, const std::map<Id, Id>& gold);

/// Jaccard similarity of the correctly answered aligned prompt tuples of two
/// languages. 1 when neither language answers anything correctly.
double jaccard_correct_overlap(const StochasticKernel& pi1, const StochasticKernel& pi2,
                               const std::map<Id, Id>& gold1, const std::map<Id, Id>& gold2,
                               const Alignment& alignment);

/// Fraction of prompts whose argmax differs between the two kernels. Only
/// prompts present in both are compared; 0 when there are none.
double changed_fraction(const StochasticKernel& before, const StochasticKernel& after);

struct EntrySummary {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  std::size_t count = 0;
};

struct EntropyStats {
  std::optional<EntrySummary> correct;
  std::optional<EntrySummary> incorrect;
};

/// Entropy of each row, split by argmax correctness. Prompts without gold are
/// skipped. Empty partitions are absent.
EntropyStats entropy_stats(const StochasticKernel& pi, const std::map<Id, Id>& gold);

}  // namespace clc
