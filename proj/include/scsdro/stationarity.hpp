#pragma once

#include <optional>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"
#include "scsdro/risk.hpp"

namespace scsdro {

/// rho = (1 + 2 kappa) delta.
double rho(double kappa, double delta);
/// rho_bar = rho + (1 + kappa) delta.
double rho_bar(double kappa, double delta);

struct MoreauProbe {
  double lambda = 1.0;
  std::size_t budget = 500;      // total Newton iterations
  double tolerance = 1e-12;      // on the squared distance to the exact prox
  std::optional<double> delta;   // overrides spec.weak_convexity_modulus() for the default lambda

  /// lambda = 1/rho_bar, or 1 in the convex case.
  static MoreauProbe standard(const LossSpec& spec, const RiskParams& rp, std::optional<double> delta = {});
};

struct ProxResult {
  Vector x_hat;
  double certified_dist_sq = 0.0;  // bound on ||x_hat - prox||^2
  std::size_t newton_iters = 0;
};

struct StationarityReport {
  Vector x_hat;
  double grad_norm = 0.0;       // ||x - x_hat|| / lambda
  double phi_at_xhat = 0.0;     // F(x_hat)
  double dist_to_xhat = 0.0;
  double envelope_value = 0.0;  // F(x_hat) + ||x_hat - x||^2 / (2 lambda)
  double certified_dist_sq = 0.0;
};

/// Minimiser of F(y) + ||y - x||^2 / (2 lambda) over the box, by a
/// log-barrier Newton method on an epigraph form of the problem. Throws
/// ConvergenceError (with the best point) if the budget runs out.
ProxResult prox_solve(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds, const RiskParams& rp,
                      const BoxConstraint& box, const VectorRef& x);

Vector prox(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds, const RiskParams& rp,
            const BoxConstraint& box, const VectorRef& x);

StationarityReport moreau_gradient(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds,
                                   const RiskParams& rp, const BoxConstraint& box, const VectorRef& x);

}  // namespace scsdro
