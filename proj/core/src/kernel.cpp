#include "clc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clc/error.hpp"

namespace clc {

Temperature::Temperature(double t) : t_(t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    std::ostringstream os;
    os << "temperature must be positive and finite, got " << t;
    throw DomainError(os.str());
  }
}

StochasticKernel::StochasticKernel(LangId domain, LangId codomain, std::map<Id, LogDist> rows)
    : domain_(domain), codomain_(codomain), rows_(std::move(rows)) {}

const LogDist& StochasticKernel::row(Id prompt) const {
  auto it = rows_.find(prompt);
  if (it == rows_.end()) {
    std::ostringstream os;
    os << "kernel " << domain_ << "->" << codomain_ << " has no row for ID " << prompt;
    throw StructuralError(os.str());
  }
  return it->second;
}

bool StochasticKernel::is_deterministic() const {
  return std::all_of(rows_.begin(), rows_.end(),
                     [](const auto& kv) { return kv.second.size() == 1; });
}

LogDist anneal(const LogDist& d, Temperature temp) {
  if (temp.value() == 1.0) return d;
  std::vector<Id> ids(d.support().begin(), d.support().end());
  std::vector<double> lw(d.logp().begin(), d.logp().end());
  for (double& v : lw) v *= temp.value();
  return LogDist::normalize(std::move(ids), std::move(lw));
}

LogDist pushforward(const StochasticKernel& outer, const LogDist& inner) {
  // A deterministic injective outer kernel only relabels; keep the row's exact
  // values instead of renormalizing.
  bool relabel = true;
  std::map<Id, Id> image;
  for (Id y : inner.support()) {
    const LogDist& r = outer.row(y);
    if (r.size() != 1 || !image.emplace(y, r.support()[0]).second) {
      relabel = false;
      break;
    }
  }
  if (relabel) {
    std::vector<Id> zs;
    for (const auto& [y, z] : image) zs.push_back(z);
    std::sort(zs.begin(), zs.end());
    if (std::adjacent_find(zs.begin(), zs.end()) == zs.end()) return inner.relabeled(image);
  }

  if (inner.size() == 1) return outer.row(inner.support()[0]);

  // Stored entries are at least kLogEps, so a product of two is about e^-55
  // at worst and linear-space sums cannot underflow. Output IDs are kept as a
  // sorted union so each row is folded in with one merge pass.
  std::vector<Id> ids;
  std::vector<double> mass;
  auto ys = inner.support();
  auto ly = inner.logp();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const LogDist& out_row = outer.row(ys[i]);
    auto zs = out_row.support();
    auto lz = out_row.logp();
    if (!std::includes(ids.begin(), ids.end(), zs.begin(), zs.end())) {
      std::vector<Id> merged;
      merged.reserve(ids.size() + zs.size());
      std::set_union(ids.begin(), ids.end(), zs.begin(), zs.end(), std::back_inserter(merged));
      std::vector<double> grown(merged.size(), 0.0);
      for (std::size_t a = 0, b = 0; a < ids.size(); ++a) {
        while (merged[b] != ids[a]) ++b;
        grown[b] = mass[a];
      }
      ids = std::move(merged);
      mass = std::move(grown);
    }
    const double py = std::exp(ly[i]);
    for (std::size_t k = 0, j = 0; k < zs.size(); ++k) {
      while (ids[j] != zs[k]) ++j;
      mass[j] += py * std::exp(lz[k]);
    }
  }
  std::vector<double> lw(mass.size());
  std::transform(mass.begin(), mass.end(), lw.begin(), [](double v) { return std::log(v); });
  return LogDist::normalize(std::move(ids), std::move(lw));
}

StochasticKernel compose(const StochasticKernel& outer, const StochasticKernel& inner) {
  if (inner.codomain() != outer.domain()) {
    std::ostringstream os;
    os << "cannot compose kernel " << outer.domain() << "->" << outer.codomain() << " after "
       << inner.domain() << "->" << inner.codomain();
    throw StructuralError(os.str());
  }
  std::map<Id, LogDist> rows;
  for (const auto& [x, r] : inner.rows()) rows.emplace(x, pushforward(outer, r));
  return StochasticKernel(inner.domain(), outer.codomain(), std::move(rows));
}

LogDist round_trip(const StochasticKernel& tau_out, const StochasticKernel& pi,
                   const StochasticKernel& tau_back, Id prompt) {
  if (tau_out.codomain() != pi.domain() || pi.codomain() != tau_back.domain() ||
      tau_back.codomain() != tau_out.domain()) {
    std::ostringstream os;
    os << "round trip does not compose: " << tau_out.domain() << "->" << tau_out.codomain()
       << ", " << pi.domain() << "->" << pi.codomain() << ", " << tau_back.domain() << "->"
       << tau_back.codomain();
    throw StructuralError(os.str());
  }
  return pushforward(tau_back, pushforward(pi, tau_out.row(prompt)));
}

namespace {

double worst_identity_tv(const StochasticKernel& outer, const StochasticKernel& inner) {
  double worst = 0.0;
  for (const auto& [x, r] : inner.rows()) {
    worst = std::max(worst, total_variation(pushforward(outer, r), LogDist::point_mass(x)));
  }
  return worst;
}

}  // namespace

InvertibilityCheck is_invertible_pair(const StochasticKernel& mu, const StochasticKernel& nu,
                                      double tol) {
  InvertibilityCheck out;
  if (nu.codomain() != mu.domain() || mu.codomain() != nu.domain()) {
    std::ostringstream os;
    os << "kernels " << mu.domain() << "->" << mu.codomain() << " and " << nu.domain() << "->"
       << nu.codomain() << " do not compose both ways";
    out.diagnostic = os.str();
    return out;
  }
  try {
    out.max_tv = std::max(worst_identity_tv(mu, nu), worst_identity_tv(nu, mu));
  } catch (const StructuralError& e) {
    out.diagnostic = e.what();
    return out;
  }
  out.invertible = out.max_tv <= tol;
  if (!out.invertible) {
    std::ostringstream os;
    os << "round trip deviates from identity by TV " << out.max_tv;
    out.diagnostic = os.str();
  }
  return out;
}

}  // namespace clc
