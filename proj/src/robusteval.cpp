#include "scsdro/robusteval.hpp"

#include <algorithm>
#include <cmath>

#include "scsdro/risk.hpp"

namespace scsdro {

Vector semidev_attack_losses(const LossSpec& spec, const VectorRef& x, const Dataset& ds, double kappa_adv) {
  if (!(kappa_adv >= 0)) throw ConfigError("kappa_adv must be non-negative");
  const Vector l = loss_values(spec, x, ds);
  const double mean = l.mean();
  return (mean + kappa_adv * (l.array() - mean).max(0.0)).matrix();
}

void PgmConfig::validate() const {
  if (!(eps > 0) || !(tau > 0)) throw ConfigError("pgm: eps and tau must be positive");
}

DataPoint pgm_attack_point(const LossSpec& spec, const VectorRef& x, const DataPoint& d, const PgmConfig& cfg) {
  cfg.validate();
  DataPoint cur = d;
  for (std::size_t t = 0; t < cfg.iters; ++t) {
    const Vector g = spec.feature_gradient(x, cur);
    const double gn = g.norm();
    if (!(gn > 0)) break;
    Vector step = (cfg.tau * cfg.eps / gn) * g;
    const double sn = step.norm();
    if (sn > cfg.eps) step *= cfg.eps / sn;  // ball around the current iterate
    cur.features += step;
  }
  return cur;
}

Dataset pgm_attack(const LossSpec& spec, const VectorRef& x, const Dataset& ds, const PgmConfig& cfg) {
  std::vector<DataPoint> pts;
  pts.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pts.push_back(pgm_attack_point(spec, x, ds.point(i), cfg));
  return Dataset(pts);
}

Histogram loss_histogram(const std::vector<double>& losses, std::size_t bins, double floor) {
  if (bins == 0) throw ArgumentError("histogram: bins must be positive");
  if (!(floor > 0)) throw ArgumentError("histogram: floor must be positive");
  std::vector<double> logs;
  logs.reserve(losses.size());
  for (double l : losses) {
    if (std::isnan(l)) continue;
    logs.push_back(std::log(std::max(l, floor)));
  }
  double lo = std::log(floor);
  double hi = lo + 1.0;
  if (!logs.empty()) {
    const auto [mn, mx] = std::minmax_element(logs.begin(), logs.end());
    lo = *mn;
    hi = *mx > *mn ? *mx : *mn + 1.0;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : logs) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

}  // namespace scsdro
