#pragma once

#include <vector>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"

namespace scsdro {

/// l_bar + kappa_adv * max(0, l_i - l_bar) for every test point, with l_bar
/// the test-set mean loss.
Vector semidev_attack_losses(const LossSpec& spec, const VectorRef& x, const Dataset& ds, double kappa_adv);

struct PgmConfig {
  double eps = 0.1;
  double tau = 0.1;
  std::size_t iters = 10;

  void validate() const;
};

/// Projected ascent on the features: a <- a + tau * eps * g/||g||, then
/// projection onto the eps-ball around the previous iterate. The target is
/// left alone; a zero feature gradient stops the attack early.
DataPoint pgm_attack_point(const LossSpec& spec, const VectorRef& x, const DataPoint& d, const PgmConfig& cfg);

/// PGM applied to every point of `ds`.
Dataset pgm_attack(const LossSpec& spec, const VectorRef& x, const Dataset& ds, const PgmConfig& cfg);

struct Histogram {
  std::vector<double> edges;        // bins + 1 ascending edges over ln(loss)
  std::vector<std::size_t> counts;  // bins entries
};

/// Equal-width histogram of ln(max(loss, floor)). A degenerate range [v, v]
/// becomes [v, v + 1]; an empty input gives edges over [ln floor, ln floor + 1].
Histogram loss_histogram(const std::vector<double>& losses, std::size_t bins, double floor = 1e-12);

}  // namespace scsdro
