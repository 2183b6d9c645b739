#include "clc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "clc/error.hpp"

namespace clc {

std::vector<Id> ranking(const LogDist& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto lp = d.logp();
  // Support is ascending, so a stable sort on probability alone breaks ties
  // by ID.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lp[a] > lp[b]; });
  std::vector<Id> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(d.support()[i]);
  return out;
}

double rankc(const LogDist& d1, const LogDist& d2, const std::map<Id, Id>& candidate_map) {
  const std::size_t m = d1.size();
  if (d2.size() != m) {
    std::ostringstream os;
    os << "rankc needs equal candidate counts, got " << m << " and " << d2.size();
    throw StructuralError(os.str());
  }
  const auto r1 = ranking(d1);
  const auto r2 = ranking(d2);
  std::vector<Id> mapped;
  mapped.reserve(m);
  for (Id c : r1) {
    auto it = candidate_map.find(c);
    if (it == candidate_map.end() || !d2.contains(it->second)) {
      std::ostringstream os;
      os << "candidate " << c << " has no aligned counterpart";
      throw StructuralError(os.str());
    }
    mapped.push_back(it->second);
  }

  // w_j is proportional to exp(M - j); written as exp(-(j - 1)) so large M
  // cannot overflow.
  std::set<Id> top1, top2;
  std::size_t overlap = 0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    const Id a = mapped[j - 1];
    const Id b = r2[j - 1];
    if (a == b) {
      ++overlap;
    } else {
      if (top2.contains(a)) ++overlap;
      if (top1.contains(b)) ++overlap;
    }
    top1.insert(a);
    top2.insert(b);
    const double w = std::exp(-static_cast<double>(j - 1));
    num += w * static_cast<double>(overlap) / static_cast<double>(j);
    den += w;
  }
  return num / den;
}

std::vector<Id> correct_prompts(const StochasticKernel& pi, const std::map<Id, Id>& gold) {
  std::vector<Id> out;
  for (const auto& [x, row] : pi.rows()) {
    auto it = gold.find(x);
    if (it == gold.end()) {
      std::ostringstream os;
      os << "no gold candidate for prompt " << x;
      throw StructuralError(os.str());
    }
    if (row.argmax() == it->second) out.push_back(x);
  }
  return out;
}

double accuracy(const StochasticKernel& pi, const std::map<Id, Id>& gold) {
  if (pi.rows().empty()) return 0.0;
  return static_cast<double>(correct_prompts(pi, gold).size()) /
         static_cast<double>(pi.rows().size());
}

double jaccard_correct_overlap(const StochasticKernel& pi1, const StochasticKernel& pi2,
                               const std::map<Id, Id>& gold1, const std::map<Id, Id>& gold2,
                               const Alignment& alignment) {
  auto tuples_of = [&](const StochasticKernel& pi, const std::map<Id, Id>& gold) {
    std::set<std::size_t> out;
    for (const auto& [x, row] : pi.rows()) {
      auto g = gold.find(x);
      auto t = alignment.tuple_of(x);
      if (g != gold.end() && t && row.argmax() == g->second) out.insert(*t);
    }
    return out;
  };
  const auto c1 = tuples_of(pi1, gold1);
  const auto c2 = tuples_of(pi2, gold2);
  std::size_t inter = 0;
  for (auto t : c1) inter += c2.count(t);
  const std::size_t uni = c1.size() + c2.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double changed_fraction(const StochasticKernel& before, const StochasticKernel& after) {
  std::size_t total = 0;
  std::size_t changed = 0;
  for (const auto& [x, row] : before.rows()) {
    if (!after.has_row(x)) continue;
    ++total;
    if (row.argmax() != after.row(x).argmax()) ++changed;
  }
  return total == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(total);
}

namespace {

std::optional<EntrySummary> summarize(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  EntrySummary s;
  s.count = xs.size();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

}  // namespace

EntropyStats entropy_stats(const StochasticKernel& pi, const std::map<Id, Id>& gold) {
  std::vector<double> good, bad;
  for (const auto& [x, row] : pi.rows()) {
    auto it = gold.find(x);
    if (it == gold.end()) continue;
    (row.argmax() == it->second ? good : bad).push_back(entropy(row));
  }
  return {summarize(good), summarize(bad)};
}

}  // namespace clc
