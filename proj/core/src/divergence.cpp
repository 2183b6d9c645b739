#include "clc/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "clc/error.hpp"

namespace clc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Walks the union of both supports, calling fn(log p, log q) with -inf for
// absent entries.
template <typename Fn>
void for_each_union(const LogDist& p, const LogDist& q, Fn&& fn) {
  auto ps = p.support();
  auto qs = q.support();
  auto pl = p.logp();
  auto ql = q.logp();
  std::size_t i = 0, j = 0;
  while (i < ps.size() || j < qs.size()) {
    if (j == qs.size() || (i < ps.size() && ps[i] < qs[j])) {
      fn(pl[i++], -kInf);
    } else if (i == ps.size() || qs[j] < ps[i]) {
      fn(-kInf, ql[j++]);
    } else {
      fn(pl[i++], ql[j++]);
    }
  }
}

}  // namespace

double DivergenceSpec::generator(double t) const {
  switch (kind) {
    case DivergenceKind::kForwardKl:
      return t == 0.0 ? 0.0 : t * std::log(t);
    case DivergenceKind::kReverseKl:
      return -std::log(t);
    case DivergenceKind::kTotalVariation:
      return 0.5 * std::abs(t - 1.0);
    case DivergenceKind::kChiSquare:
      return (t - 1.0) * (t - 1.0);
  }
  return 0.0;
}

double DivergenceSpec::generator_at_zero() const {
  switch (kind) {
    case DivergenceKind::kForwardKl:
      return 0.0;
    case DivergenceKind::kReverseKl:
      return kInf;
    case DivergenceKind::kTotalVariation:
      return 0.5;
    case DivergenceKind::kChiSquare:
      return 1.0;
  }
  return 0.0;
}

double DivergenceSpec::generator_slope_at_infinity() const {
  switch (kind) {
    case DivergenceKind::kForwardKl:
      return kInf;
    case DivergenceKind::kReverseKl:
      return 0.0;
    case DivergenceKind::kTotalVariation:
      return 0.5;
    case DivergenceKind::kChiSquare:
      return kInf;
  }
  return 0.0;
}

std::string_view DivergenceSpec::name() const {
  switch (kind) {
    case DivergenceKind::kForwardKl:
      return "forward-kl";
    case DivergenceKind::kReverseKl:
      return "reverse-kl";
    case DivergenceKind::kTotalVariation:
      return "total-variation";
    case DivergenceKind::kChiSquare:
      return "chi-square";
  }
  return "";
}

DivergenceSpec DivergenceSpec::parse(std::string_view name) {
  for (DivergenceKind k : kAllDivergenceKinds) {
    if (DivergenceSpec{k}.name() == name) return DivergenceSpec{k};
  }
  throw DomainError("unknown divergence '" + std::string(name) + "'");
}

double Divergence::value() const {
  if (infinite_) throw DomainError("divergence is infinite");
  return value_;
}

Divergence f_divergence(const DivergenceSpec& spec, const LogDist& p, const LogDist& q) {
  double sum = 0.0;
  bool inf = false;
  for_each_union(p, q, [&](double lp, double lq) {
    const bool has_p = lp > -kInf;
    const bool has_q = lq > -kInf;
    switch (spec.kind) {
      case DivergenceKind::kForwardKl:
        if (has_p && !has_q) inf = true;
        if (has_p && has_q) sum += std::exp(lp) * (lp - lq);
        break;
      case DivergenceKind::kReverseKl:
        if (has_q && !has_p) inf = true;
        if (has_p && has_q) sum += std::exp(lq) * (lq - lp);
        break;
      case DivergenceKind::kTotalVariation:
        sum += 0.5 * std::abs(std::exp(lp) - std::exp(lq));
        break;
      case DivergenceKind::kChiSquare:
        if (has_p && !has_q) inf = true;
        if (has_q) {
          double d = std::exp(lp) - std::exp(lq);
          sum += d * d / std::exp(lq);
        }
        break;
    }
  });
  if (inf) return Divergence::infinite();
  // Rounding can leave a tiny negative sum for p == q.
  return Divergence::finite(std::max(sum, 0.0));
}

Divergence f_divergence(const DivergenceSpec& spec, const LogDist& p, const LogDist& q,
                        std::span<const Id> universe) {
  auto check = [&](const LogDist& d, const char* which) {
    for (Id id : d.support()) {
      if (std::find(universe.begin(), universe.end(), id) == universe.end()) {
        std::ostringstream os;
        os << "support of " << which << " contains ID " << id << " outside the candidate universe";
        throw StructuralError(os.str());
      }
    }
  };
  check(p, "p");
  check(q, "q");
  return f_divergence(spec, p, q);
}

Divergence f_divergence_by_expectation(const DivergenceSpec& spec, const LogDist& p,
                                       const LogDist& q) {
  double sum = 0.0;
  for_each_union(p, q, [&](double lp, double lq) {
    const double pv = std::exp(lp);
    const double qv = std::exp(lq);
    if (qv > 0.0 && pv > 0.0) {
      sum += qv * spec.generator(pv / qv);
    } else if (qv > 0.0) {
      sum += qv * spec.generator_at_zero();
    } else if (pv > 0.0) {
      sum += pv * spec.generator_slope_at_infinity();
    }
  });
  if (std::isinf(sum)) return Divergence::infinite();
  return Divergence::finite(std::max(sum, 0.0));
}

}  // namespace clc
