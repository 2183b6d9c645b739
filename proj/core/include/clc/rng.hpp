#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "clc/log_dist.hpp"

namespace clc {

/// Seeded generator with host-independent draws. std::mt19937_64's output
/// sequence is fixed by the standard but the std:: distributions are not, so
/// every transform below is written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream derived from this seed and a stream index.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on {0, ..., n-1}; n > 0.
  std::size_t uniform_index(std::size_t n);
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);
  /// Symmetric Dirichlet(alpha) over k categories.
  std::vector<double> dirichlet(double alpha, std::size_t k);
  /// Index into `d.support()`, drawn from d.
  std::size_t categorical(const LogDist& d);
  /// Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  /// k distinct indices from {0, ..., n-1} in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace clc
