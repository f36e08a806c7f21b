#pragma once

#include <vector>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"

namespace scsdro {

struct RiskParams {
  double kappa = 0.0;

  explicit RiskParams(double k = 0.0);
};

/// Finite-support random variable: outcome i has value values[i] with
/// probability probs[i].
class FiniteDistribution {
 public:
  FiniteDistribution(Vector values, Vector probs);
  /// Uniform probabilities.
  static FiniteDistribution uniform(Vector values);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const { return values_; }
  const Vector& probs() const { return probs_; }
  double mean() const { return probs_.dot(values_); }

 private:
  Vector values_;
  Vector probs_;
};

/// E Z + kappa * E (Z - E Z)_+.
double mean_semideviation(const FiniteDistribution& d, const RiskParams& rp);

/// Largest support handled by the vertex enumeration.
inline constexpr std::size_t kOracleMaxSupport = 20;

/// max over xi in {0, kappa}^n of E[Z (1 + xi - E xi)], by enumeration.
double dual_value_oracle(const FiniteDistribution& d, const RiskParams& rp);

/// The maximising density 1 + xi* - E xi* from the same enumeration.
Vector worst_case_distortion(const FiniteDistribution& d, const RiskParams& rp);

/// Per-point losses l(x, D_i).
Vector loss_values(const LossSpec& spec, const VectorRef& x, const Dataset& ds);

/// h(x) = E l(x, D).
double inner_value(const LossSpec& spec, const VectorRef& x, const Dataset& ds);

/// f(x, u) = E[u + kappa max(0, l(x, D) - u)].
double outer_value(const LossSpec& spec, const VectorRef& x, double u, const Dataset& ds, const RiskParams& rp);

/// F(x) = f(x, h(x)).
double composite_objective(const LossSpec& spec, const VectorRef& x, const Dataset& ds, const RiskParams& rp);

}  // namespace scsdro
