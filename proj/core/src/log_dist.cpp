#include "clc/log_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "clc/error.hpp"

namespace clc {
namespace {

constexpr double kNormTolerance = 1e-9;

void sort_by_id(std::vector<Id>& support, std::vector<double>& values) {
  if (support.size() != values.size()) {
    throw StructuralError("support and value vectors differ in length");
  }
  if (std::is_sorted(support.begin(), support.end())) return;
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  std::vector<Id> ids(support.size());
  std::vector<double> vals(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    ids[i] = support[order[i]];
    vals[i] = values[order[i]];
  }
  support = std::move(ids);
  values = std::move(vals);
}

void check_support(const std::vector<Id>& support) {
  if (support.empty()) throw StructuralError("distribution with empty support");
  auto dup = std::adjacent_find(support.begin(), support.end());
  if (dup != support.end()) {
    std::ostringstream os;
    os << "duplicate response ID " << *dup << " in support";
    throw StructuralError(os.str());
  }
}

void check_values(const std::vector<double>& values) {
  for (double v : values) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw DomainError("log-probability must be finite or -inf");
    }
  }
}

// Returns true when any entry was raised to the floor.
bool clamp_to_floor(std::vector<double>& logp) {
  bool clamped = false;
  for (double& v : logp) {
    if (v < kLogEps) {
      v = kLogEps;
      clamped = true;
    }
  }
  return clamped;
}

void shift(std::vector<double>& logp, double by) {
  for (double& v : logp) v -= by;
}

}  // namespace

double logsumexp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

LogDist LogDist::normalize(std::vector<Id> support, std::vector<double> log_weights) {
  sort_by_id(support, log_weights);
  check_support(support);
  check_values(log_weights);
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw DomainError("distribution has no mass");
  // Shifting by the maximum first keeps large logits from costing precision.
  shift(log_weights, top);
  shift(log_weights, logsumexp(log_weights));
  if (clamp_to_floor(log_weights)) shift(log_weights, logsumexp(log_weights));
  return LogDist(std::move(support), std::move(log_weights));
}

LogDist LogDist::from_normalized_log(std::vector<Id> support, std::vector<double> logp) {
  sort_by_id(support, logp);
  check_support(support);
  check_values(logp);
  double lse = logsumexp(logp);
  if (!(std::abs(lse) <= kNormTolerance)) {
    std::ostringstream os;
    os.precision(12);
    os << "row sums to " << std::exp(lse) << ", expected 1 within 1e-9";
    throw DomainError(os.str());
  }
  if (clamp_to_floor(logp)) shift(logp, logsumexp(logp));
  return LogDist(std::move(support), std::move(logp));
}

LogDist LogDist::from_probs(std::vector<Id> support, std::vector<double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("probability must be finite and non-negative");
    total += p;
  }
  if (!(std::abs(total - 1.0) <= kNormTolerance)) {
    std::ostringstream os;
    os.precision(12);
    os << "row sums to " << total << ", expected 1 within 1e-9";
    throw DomainError(os.str());
  }
  std::vector<double> logp(probs.size());
  std::transform(probs.begin(), probs.end(), logp.begin(), [](double p) { return std::log(p); });
  return normalize(std::move(support), std::move(logp));
}

LogDist LogDist::point_mass(Id id) { return LogDist({id}, {0.0}); }

LogDist LogDist::uniform(std::vector<Id> support) {
  std::vector<double> w(support.size(), 0.0);
  return normalize(std::move(support), std::move(w));
}

std::optional<std::size_t> LogDist::index_of(Id id) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), id);
  if (it == support_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - support_.begin());
}

double LogDist::log_prob(Id id) const {
  auto i = index_of(id);
  return i ? logp_[*i] : -std::numeric_limits<double>::infinity();
}

double LogDist::prob(Id id) const {
  auto i = index_of(id);
  return i ? std::exp(logp_[*i]) : 0.0;
}

std::vector<double> LogDist::probs() const {
  std::vector<double> out(logp_.size());
  std::transform(logp_.begin(), logp_.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

Id LogDist::argmax() const {
  // Support is ascending, so the first maximum is the smallest ID.
  auto it = std::max_element(logp_.begin(), logp_.end());
  return support_[static_cast<std::size_t>(it - logp_.begin())];
}

double total_variation(const LogDist& p, const LogDist& q) {
  auto ps = p.support();
  auto qs = q.support();
  auto pl = p.logp();
  auto ql = q.logp();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ps.size() || j < qs.size()) {
    if (j == qs.size() || (i < ps.size() && ps[i] < qs[j])) {
      sum += std::exp(pl[i++]);
    } else if (i == ps.size() || qs[j] < ps[i]) {
      sum += std::exp(ql[j++]);
    } else {
      sum += std::abs(std::exp(pl[i++]) - std::exp(ql[j++]));
    }
  }
  return 0.5 * sum;
}

double entropy(const LogDist& d) {
  double h = 0.0;
  for (double lp : d.logp()) h -= std::exp(lp) * lp;
  return std::max(h, 0.0);
}

LogDist restrict_to(const LogDist& d, std::span<const Id> keep, bool* floored) {
  if (std::equal(keep.begin(), keep.end(), d.support().begin(), d.support().end())) {
    if (floored) *floored = false;
    return d;
  }
  std::vector<Id> ids(keep.begin(), keep.end());
  std::vector<double> lw(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) lw[i] = d.log_prob(keep[i]);
  const double lse = logsumexp(lw);
  // The floor applies to the conditioned row; with no mass left it is uniform.
  if (!std::isfinite(lse)) std::fill(lw.begin(), lw.end(), 0.0);
  const bool hit_floor =
      !std::isfinite(lse) ||
      std::any_of(lw.begin(), lw.end(), [&](double v) { return v - lse < kLogEps; });
  if (floored) *floored = hit_floor;
  return LogDist::normalize(std::move(ids), std::move(lw));
}

}  // namespace clc
