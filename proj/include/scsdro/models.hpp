#pragma once

#include <string>

#include "scsdro/core.hpp"

namespace scsdro {

enum class BaseLoss { kMad, kLeastSquares, kLogistic };
enum class PenaltyKind { kNone, kLasso, kScad, kMcp };

struct PenaltyParams {
  double lambda = 0.1;
  double gamma = 3.0;
};

// Throws ConfigError when the parameters are invalid for `kind`.
void validate_penalty(PenaltyKind kind, const PenaltyParams& p);

double penalty_value(PenaltyKind kind, const PenaltyParams& p, const VectorRef& x);
// Per-coordinate selection; the midpoint of one-sided derivatives at the
// only kink (x_j = 0), i.e. 0.
Vector penalty_subgradient(PenaltyKind kind, const PenaltyParams& p, const VectorRef& x);

/// Per-sample loss l(x, D) = base(a^T x, b) + r(x).
class LossSpec {
 public:
  LossSpec() = default;
  LossSpec(BaseLoss base, PenaltyKind penalty = PenaltyKind::kNone, PenaltyParams params = {});

  BaseLoss base() const { return base_; }
  PenaltyKind penalty() const { return penalty_; }
  const PenaltyParams& params() const { return params_; }

  double base_value(const VectorRef& x, const DataPoint& d) const;
  double value(const VectorRef& x, const DataPoint& d) const;
  Vector subgradient(const VectorRef& x, const DataPoint& d) const;

  // Row-view overloads used by the full-batch loops.
  double value(const VectorRef& x, const Dataset& ds, std::size_t i) const;
  Vector subgradient(const VectorRef& x, const Dataset& ds, std::size_t i) const;

  /// d base / d a (gradient with respect to the features); selection 0 at
  /// a MAD residual of exactly 0.
  Vector feature_gradient(const VectorRef& x, const DataPoint& d) const;

  /// Penalty modulus: 1/(gamma-1) for SCAD, 1/gamma for MCP, 0 otherwise.
  /// The bases are convex, so this is also the weak-convexity modulus of l.
  double weak_convexity_modulus() const;

  /// max_i of the gradient-Lipschitz constant of a smooth base (0 for MAD):
  /// 2||a_i||^2 for least squares, ||a_i||^2/4 for logistic.
  double smoothness_modulus(const Dataset& ds) const;

  /// max_i of a Lipschitz constant of l(., D_i) on the box.
  double lipschitz_bound(const Dataset& ds, const BoxConstraint& box) const;

 private:
  double base_from_margin(double z, double b) const;

  BaseLoss base_ = BaseLoss::kMad;
  PenaltyKind penalty_ = PenaltyKind::kNone;
  PenaltyParams params_{};
};

BaseLoss parse_base_loss(const std::string& name);
PenaltyKind parse_penalty(const std::string& name);
std::string to_string(BaseLoss b);
std::string to_string(PenaltyKind p);

}  // namespace scsdro
