#pragma once

// Reference implementations for tests. Everything here works in linear space
// with long double and plain loops, sharing no code with the library beyond
// reading its data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "clc/kernel.hpp"
#include "clc/log_dist.hpp"

namespace oracle {

using clc::Id;
using Dist = std::map<Id, long double>;

inline Dist probs(const clc::LogDist& d) {
  Dist out;
  for (std::size_t i = 0; i < d.size(); ++i) out[d.support()[i]] = std::exp((long double)d.logp()[i]);
  return out;
}

inline Dist normalized(Dist d) {
  long double s = 0;
  for (auto& [k, v] : d) s += v;
  for (auto& [k, v] : d) v /= s;
  return d;
}

/// sum_y outer(z|y) inner(y) as an explicit matrix-vector product.
inline Dist pushforward(const clc::StochasticKernel& outer, const Dist& inner) {
  Dist out;
  for (const auto& [y, py] : inner) {
    for (const auto& [z, pz] : probs(outer.row(y))) out[z] += pz * py;
  }
  return out;
}

/// Enumerates every (x', y') pair of the round trip.
inline Dist round_trip(const clc::StochasticKernel& tau_out, const clc::StochasticKernel& pi,
                       const clc::StochasticKernel& tau_back, Id x) {
  Dist out;
  for (const auto& [x2, px2] : probs(tau_out.row(x))) {
    for (const auto& [y2, py2] : probs(pi.row(x2))) {
      for (const auto& [y, py] : probs(tau_back.row(y2))) out[y] += py * py2 * px2;
    }
  }
  return out;
}

inline Dist restrict(const Dist& d, const std::vector<Id>& keep) {
  Dist out;
  for (Id k : keep) {
    auto it = d.find(k);
    out[k] = it == d.end() ? 0.0L : it->second;
  }
  return normalized(out);
}

inline long double kl(const Dist& p, const Dist& q) {
  long double s = 0;
  for (const auto& [k, pv] : p) {
    if (pv > 0) s += pv * std::log(pv / q.at(k));
  }
  return s;
}

inline long double tv(const Dist& p, const Dist& q) {
  std::set<Id> keys;
  for (const auto& [k, v] : p) keys.insert(k);
  for (const auto& [k, v] : q) keys.insert(k);
  long double s = 0;
  for (Id k : keys) {
    const long double a = p.count(k) ? p.at(k) : 0.0L;
    const long double b = q.count(k) ? q.at(k) : 0.0L;
    s += std::fabs(a - b);
  }
  return s / 2;
}

inline long double chi_square(const Dist& p, const Dist& q) {
  long double s = 0;
  for (const auto& [k, qv] : q) {
    const long double d = (p.count(k) ? p.at(k) : 0.0L) - qv;
    s += d * d / qv;
  }
  return s;
}

inline long double entropy(const Dist& p) {
  long double h = 0;
  for (const auto& [k, v] : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

inline Dist power(const Dist& p, long double t) {
  Dist out;
  for (const auto& [k, v] : p) out[k] = std::pow(v, t);
  return normalized(out);
}

/// Candidates by descending probability, ties by ascending ID.
inline std::vector<Id> order(const Dist& d) {
  std::vector<std::pair<Id, long double>> v(d.begin(), d.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<Id> out;
  for (const auto& [k, p] : v) out.push_back(k);
  return out;
}

/// Ranking agreement straight from the definition: weights exp(M - j) over
/// their sum, times |top-j(1) intersect top-j(2)| / j. `first` is already
/// expressed in the second ranking's IDs.
inline long double rankc(const std::vector<Id>& first, const std::vector<Id>& second) {
  const std::size_t m = first.size();
  long double norm = 0;
  for (std::size_t k = 1; k <= m; ++k) norm += std::exp((long double)(m - k));
  long double total = 0;
  for (std::size_t j = 1; j <= m; ++j) {
    std::set<Id> a(first.begin(), first.begin() + j);
    std::set<Id> b(second.begin(), second.begin() + j);
    std::vector<Id> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    total += std::exp((long double)(m - j)) / norm * (long double)both.size() / (long double)j;
  }
  return total;
}

/// ref * prod target^beta, normalized.
inline Dist geometric_optimum(const Dist& ref, const std::vector<std::pair<Dist, long double>>& tilts) {
  Dist out;
  for (const auto& [k, r] : ref) {
    long double v = r;
    for (const auto& [t, beta] : tilts) v *= std::pow(t.at(k), beta);
    out[k] = v;
  }
  return normalized(out);
}

}  // namespace oracle
