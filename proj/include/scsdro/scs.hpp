#pragma once

#include <optional>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/trace.hpp"

namespace scsdro {

struct ScsConfig {
  double tau = 0.01;
  std::size_t iters = 1000;
  RiskParams risk{};
  BoxConstraint box = BoxConstraint::symmetric(1, 10.0);
  std::uint64_t seed = 0;
  std::size_t trace_thin = 1;   // record every trace_thin-th iteration
  std::size_t pilot_batch = 32; // samples for u^0
  std::optional<Vector> x0;     // defaults to the box centre; projected
  IterateObserver observer;

  void validate() const;
};

struct ScsState {
  Vector x;
  double u = 0.0;
  std::size_t k = 0;
};

struct GatedEstimates {
  Vector G;        // subgradient at D1
  Vector g_fx;     // kappa * I * G
  double g_fu = 1.0;  // 1 - kappa * I
  Vector g_h;      // subgradient at D2
  Vector J;        // subgradient at D3
  double h_tilde = 0.0;  // mean of the three sampled losses
  bool indicator = false;  // l(x, D1) >= u

  /// g_fx + g_fu * g_h.
  Vector direction() const;
};

GatedEstimates gated_estimates(const LossSpec& spec, const VectorRef& x, double u, const RiskParams& rp,
                               const DataPoint& d1, const DataPoint& d2, const DataPoint& d3);

/// u + tau (h_tilde - u) + <J, x_new - x_old>.
double tracker_update(double u, double tau, double h_tilde, const VectorRef& J, const VectorRef& x_new,
                      const VectorRef& x_old);

/// Projected move x - tau * direction; throws NumericError on non-finite input.
Vector projected_step(const BoxConstraint& box, const VectorRef& x, double tau, const VectorRef& direction);

/// One full iteration given the estimates; returns (x^{k+1}, u^{k+1}, k+1).
ScsState step(const ScsConfig& cfg, const ScsState& state, const GatedEstimates& est);

/// Algorithm with linearised inner tracking; every random source is a
/// substream of RngStream(cfg.seed).
RunResult run_scs(const ScsConfig& cfg, const LossSpec& spec, const Dataset& ds);

/// Box centre, or the projected user guess.
Vector initial_point(const BoxConstraint& box, const std::optional<Vector>& guess);

/// Uniform random draw from `ds` via one uniform_index call.
DataPoint draw_point(const Dataset& ds, RngStream& rng);

}  // namespace scsdro
