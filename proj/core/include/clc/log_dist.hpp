#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace clc {

/// Opaque string identifier. Prompts and responses are both strings.
using Id = std::int64_t;

/// Log-probability floor, about log(1e-12).
inline constexpr double kLogEps = -27.6;

/// log(sum(exp(x))) with the max shift. Returns -inf for an empty span or
/// when every entry is -inf.
double logsumexp(std::span<const double> x);

/// A normalized distribution over a finite, sorted set of response IDs,
/// stored as natural-log probabilities.
///
/// Invariants: support IDs unique and ascending; logsumexp(logp) == 0 within
/// 1e-9; no entry below kLogEps (entries are clamped and the row
/// renormalized at construction).
class LogDist {
 public:
  /// Normalizes arbitrary (finite or -inf) log-weights. Support order is free;
  /// entries are reordered by ID.
  static LogDist normalize(std::vector<Id> support, std::vector<double> log_weights);

  /// Accepts already-normalized log-probabilities without shifting them, so
  /// stored rows survive a save/load cycle bit for bit. Throws DomainError if
  /// the row does not sum to one within 1e-9.
  static LogDist from_normalized_log(std::vector<Id> support, std::vector<double> logp);

  /// Linear-space probabilities; must be non-negative and sum to one within
  /// 1e-9.
  static LogDist from_probs(std::vector<Id> support, std::vector<double> probs);

  static LogDist point_mass(Id id);
  static LogDist uniform(std::vector<Id> support);

  std::span<const Id> support() const { return support_; }
  std::span<const double> logp() const { return logp_; }
  std::size_t size() const { return support_.size(); }

  std::optional<std::size_t> index_of(Id id) const;
  bool contains(Id id) const { return index_of(id).has_value(); }
  /// -inf when id is outside the support.
  double log_prob(Id id) const;
  double prob(Id id) const;
  std::vector<double> probs() const;

  /// Highest-probability ID; ties go to the smallest ID.
  Id argmax() const;

  /// The distribution re-indexed through `relabel` (old ID -> new ID).
  template <typename Map>
  LogDist relabeled(const Map& relabel) const {
    std::vector<Id> ids;
    ids.reserve(support_.size());
    for (Id id : support_) ids.push_back(relabel.at(id));
    return from_normalized_log(std::move(ids), logp_);
  }

  friend bool operator==(const LogDist&, const LogDist&) = default;

 private:
  LogDist(std::vector<Id> support, std::vector<double> logp)
      : support_(std::move(support)), logp_(std::move(logp)) {}

  std::vector<Id> support_;
  std::vector<double> logp_;
};

/// Total-variation distance over the union of supports.
double total_variation(const LogDist& p, const LogDist& q);

/// Shannon entropy in nats.
double entropy(const LogDist& d);

/// Conditions `d` on `keep`: entries outside are dropped, missing entries get
/// the floor, and the row is renormalized. `floored` (optional) reports
/// whether any kept entry was below the floor before clamping.
LogDist restrict_to(const LogDist& d, std::span<const Id> keep, bool* floored = nullptr);

}  // namespace clc
