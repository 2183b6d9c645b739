#include "clc/consistency.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "clc/error.hpp"

namespace clc {
namespace {

const StochasticKernel& find_translator(const TranslatorSet& translators, LangId from, LangId to) {
  auto it = translators.find({from, to});
  if (it == translators.end()) {
    std::ostringstream os;
    os << "no translator " << from << "->" << to;
    throw StructuralError(os.str());
  }
  return it->second;
}

const StochasticKernel& find_policy(const PolicySet& pi, LangId m) {
  if (m < 0 || static_cast<std::size_t>(m) >= pi.size()) {
    std::ostringstream os;
    os << "no policy for language " << m;
    throw StructuralError(os.str());
  }
  return pi[static_cast<std::size_t>(m)];
}

double score(const DivergenceSpec& spec, const LogDist& p, const LogDist& q, double log_t) {
  return f_divergence(spec, p, anneal(q, Temperature(std::exp(log_t))))
      .value_or(std::numeric_limits<double>::infinity());
}

DirectionResult search(const DivergenceSpec& spec, const LogDist& p, const LogDist& q,
                       const TemperatureSearch& s) {
  if (s.points < 1) throw DomainError("temperature grid is empty");
  if (!(s.lo > 0.0) || !(s.hi >= s.lo) || !std::isfinite(s.hi)) {
    throw DomainError("temperature grid needs 0 < lo <= hi < inf");
  }
  if (!(s.rel_width > 0.0)) throw DomainError("golden-section width must be positive");

  // Grid in log10 so that integer decades (T = 1 in particular) are hit
  // exactly.
  const double e_lo = std::log10(s.lo);
  const double e_hi = std::log10(s.hi);
  std::vector<double> log_t(static_cast<std::size_t>(s.points));
  for (int i = 0; i < s.points; ++i) {
    const double e = s.points == 1 ? e_lo : e_lo + (e_hi - e_lo) * i / (s.points - 1);
    log_t[static_cast<std::size_t>(i)] = std::log(std::pow(10.0, e));
  }
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    const double v = score(spec, p, q, log_t[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double best_lt = log_t[best];

  if (log_t.size() > 1 && best_val > 0.0) {
    double a = log_t[best == 0 ? 0 : best - 1];
    double b = log_t[std::min(best + 1, log_t.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double width = std::log1p(s.rel_width);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = score(spec, p, q, c);
    double fd = score(spec, p, q, d);
    while (b - a > width) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = score(spec, p, q, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = score(spec, p, q, d);
      }
    }
    if (fc < best_val) {
      best_val = fc;
      best_lt = c;
    }
    if (fd < best_val) {
      best_val = fd;
      best_lt = d;
    }
  }
  const double t = std::exp(best_lt);
  return {f_divergence(spec, p, anneal(q, Temperature(t))), t};
}

DirectionResult direction(const PolicySet& pi, const TranslatorSet& translators, LangId a,
                          LangId b, Id x, const DivergenceSpec& spec, const TemperatureMode& mode,
                          bool first) {
  const LogDist& p = find_policy(pi, a).row(x);
  const LogDist q = policy_round_trip(pi, translators, a, b, x);
  if (const auto* fixed = std::get_if<FixedTemperatures>(&mode)) {
    const double t = first ? fixed->t_a : fixed->t_b;
    return {f_divergence(spec, p, anneal(q, Temperature(t))), t};
  }
  return search(spec, p, q, std::get<TemperatureSearch>(mode));
}

}  // namespace

LogDist policy_round_trip(const PolicySet& pi, const TranslatorSet& translators, LangId a,
                          LangId b, Id prompt_a) {
  const LogDist& p = find_policy(pi, a).row(prompt_a);
  const LogDist rt = round_trip(find_translator(translators, a, b), find_policy(pi, b),
                                find_translator(translators, b, a), prompt_a);
  return restrict_to(rt, p.support());
}

ConsistencyReport check_consistency(const PolicySet& pi, const TranslatorSet& translators,
                                    LangId lang_a, LangId lang_b, Id prompt_a, Id prompt_b,
                                    const DivergenceSpec& spec, double eps,
                                    const TemperatureMode& mode) {
  if (const auto* fixed = std::get_if<FixedTemperatures>(&mode)) {
    // Reject bad temperatures before any work.
    static_cast<void>(Temperature(fixed->t_a));
    static_cast<void>(Temperature(fixed->t_b));
  }
  ConsistencyReport r;
  r.lang_a = lang_a;
  r.lang_b = lang_b;
  r.prompt_a = prompt_a;
  r.prompt_b = prompt_b;
  r.epsilon = eps;
  r.direction_a = direction(pi, translators, lang_a, lang_b, prompt_a, spec, mode, true);
  r.direction_b = direction(pi, translators, lang_b, lang_a, prompt_b, spec, mode, false);
  const auto& da = r.direction_a.divergence;
  const auto& db = r.direction_b.divergence;
  if (da.is_infinite() || db.is_infinite()) {
    r.divergence_at_best_t = Divergence::infinite();
  } else {
    r.divergence_at_best_t = Divergence::finite(std::max(da.value(), db.value()));
  }
  r.satisfied = da.at_most(eps) && db.at_most(eps);
  return r;
}

}  // namespace clc
