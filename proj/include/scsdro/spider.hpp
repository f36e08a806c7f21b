#pragma once

#include <optional>
#include <vector>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/trace.hpp"

namespace scsdro {

struct SpiderConfig {
  double tau = 0.01;
  std::size_t iters = 1000;
  std::size_t epoch = 10;        // T
  std::size_t large_batch = 64;  // B
  std::size_t small_batch = 8;   // b
  RiskParams risk{};
  BoxConstraint box = BoxConstraint::symmetric(1, 10.0);
  std::uint64_t seed = 0;
  std::size_t trace_thin = 1;
  std::optional<Vector> x0;
  IterateObserver observer;

  void validate() const;
};

struct SpiderState {
  Vector x;
  Vector x_prev;
  double u = 0.0;
  std::size_t k = 0;
};

struct SpiderSchedule {
  std::size_t large_batch = 1;  // B
  std::size_t small_batch = 1;  // b
  std::size_t epoch = 1;        // T
};

/// B = ceil(2 sigma^2 / tau^2), b = ceil(2 L M sigma / tau),
/// T = max(1, ceil(sigma / (L M tau))). The ceiling ignores relative
/// round-off below 1e-12 so exact integers are not bumped up.
SpiderSchedule auto_params(double sigma, double L, double M, double tau);

/// Mean loss over the batch.
double restart_tracker(const LossSpec& spec, const VectorRef& x, const std::vector<DataPoint>& batch);

/// u_prev + mean over the batch of l(x, D) - l(x_prev, D).
double refresh_tracker(const LossSpec& spec, double u_prev, const VectorRef& x, const VectorRef& x_prev,
                       const std::vector<DataPoint>& batch);

/// Algorithm with the SPIDER inner estimator. Gate samples come from the
/// D1/D2 substreams; restart and refresh batches from the Batch substream.
RunResult run_spider(const SpiderConfig& cfg, const LossSpec& spec, const Dataset& ds);

struct SpiderConstants {
  double sigma = 0.0;     // std of l(x0, D)
  double lipschitz = 0.0; // L
  double M = 0.0;         // second-moment bound of the search direction
  double delta_h = 0.0;   // max subgradient norm seen
  double delta_fx = 0.0;  // kappa * delta_h
};

/// Pilot estimates of sigma, L and M at x0 from `pilot` draws (>= 16).
SpiderConstants estimate_constants(const LossSpec& spec, const Dataset& ds, const BoxConstraint& box,
                                   const RiskParams& rp, const VectorRef& x0, RngStream& rng,
                                   std::size_t pilot);

/// sigma^2/B + T L^2 M^2 tau^2 / b.
double spider_mse_bound(const SpiderConstants& c, const SpiderSchedule& s, double tau);

}  // namespace scsdro
