#pragma once

#include <map>
#include <string>

#include "clc/log_dist.hpp"

namespace clc {

/// Language index m in [0, N).
using LangId = int;

/// A positive annealing exponent.
class Temperature {
 public:
  explicit Temperature(double t);
  double value() const { return t_; }

 private:
  double t_;
};

/// A prompted model restricted to finitely many prompts: prompt ID -> LogDist
/// over the codomain language. Translators, reference models and policies are
/// all kernels.
class StochasticKernel {
 public:
  StochasticKernel(LangId domain, LangId codomain, std::map<Id, LogDist> rows = {});

  LangId domain() const { return domain_; }
  LangId codomain() const { return codomain_; }
  const std::map<Id, LogDist>& rows() const { return rows_; }

  bool has_row(Id prompt) const { return rows_.contains(prompt); }
  /// Throws StructuralError naming the missing ID.
  const LogDist& row(Id prompt) const;

  /// Every row is a point mass.
  bool is_deterministic() const;

  friend bool operator==(const StochasticKernel&, const StochasticKernel&) = default;

 private:
  LangId domain_;
  LangId codomain_;
  std::map<Id, LogDist> rows_;
};

/// Raise to the power T and renormalize. T == 1 returns the input unchanged.
LogDist anneal(const LogDist& d, Temperature temp);

/// (outer # inner)(z) = sum_y outer(z|y) inner(y), in log space.
LogDist pushforward(const StochasticKernel& outer, const LogDist& inner);

/// Row-wise pushforward: (outer # inner)(.|x) for every prompt of `inner`.
StochasticKernel compose(const StochasticKernel& outer, const StochasticKernel& inner);

/// (tau_back # pi # tau_out)(.|prompt): translate the prompt, respond, translate
/// the response back.
LogDist round_trip(const StochasticKernel& tau_out, const StochasticKernel& pi,
                   const StochasticKernel& tau_back, Id prompt);

struct InvertibilityCheck {
  bool invertible = false;
  /// Worst total-variation distance to the identity over both compositions.
  double max_tv = 0.0;
  std::string diagnostic;

  explicit operator bool() const { return invertible; }
};

/// Whether mu # nu and nu # mu are both the identity up to `tol` in TV.
InvertibilityCheck is_invertible_pair(const StochasticKernel& mu, const StochasticKernel& nu,
                                      double tol);

}  // namespace clc
