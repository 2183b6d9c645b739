#pragma once

#include <array>
#include <span>
#include <string_view>

#include "clc/log_dist.hpp"

namespace clc {

enum class DivergenceKind { kForwardKl, kReverseKl, kTotalVariation, kChiSquare };

inline constexpr std::array<DivergenceKind, 4> kAllDivergenceKinds = {
    DivergenceKind::kForwardKl, DivergenceKind::kReverseKl, DivergenceKind::kTotalVariation,
    DivergenceKind::kChiSquare};

/// Selects the convex generator f with f(1) = 0:
///   forward-kl        f(t) = t log t
///   reverse-kl        f(t) = -log t
///   total-variation   f(t) = |t - 1| / 2
///   chi-square        f(t) = (t - 1)^2
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::kForwardKl;

  double generator(double t) const;
  /// lim_{t->0+} f(t); may be +inf.
  double generator_at_zero() const;
  /// lim_{t->inf} f(t)/t; may be +inf.
  double generator_slope_at_infinity() const;

  std::string_view name() const;
  /// Accepts the names above; throws DomainError otherwise.
  static DivergenceSpec parse(std::string_view name);
};

/// A divergence value that may be +infinity. Infinity is a tag, not an
/// overflowed double.
class Divergence {
 public:
  static Divergence finite(double nats) { return Divergence(nats, false); }
  static Divergence infinite() { return Divergence(0.0, true); }

  bool is_infinite() const { return infinite_; }
  /// Throws DomainError when infinite.
  double value() const;
  /// The value, or `fallback` when infinite.
  double value_or(double fallback) const { return infinite_ ? fallback : value_; }

  bool at_most(double eps) const { return !infinite_ && value_ <= eps; }

 private:
  Divergence(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

/// D_f(p || q) over the union of both supports (absent entries are zero).
Divergence f_divergence(const DivergenceSpec& spec, const LogDist& p, const LogDist& q);

/// As above, but both supports must lie inside `universe`; otherwise
/// StructuralError.
Divergence f_divergence(const DivergenceSpec& spec, const LogDist& p, const LogDist& q,
                        std::span<const Id> universe);

/// The defining expectation E_{y~q}[f(p(y)/q(y))] evaluated literally through
/// the generator, with the limit conventions for zero entries. Independent of
/// the closed forms used by f_divergence.
Divergence f_divergence_by_expectation(const DivergenceSpec& spec, const LogDist& p,
                                       const LogDist& q);

inline Divergence forward_kl(const LogDist& p, const LogDist& q) {
  return f_divergence({DivergenceKind::kForwardKl}, p, q);
}

}  // namespace clc
