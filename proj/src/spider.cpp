#include "scsdro/spider.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "scsdro/scs.hpp"

namespace scsdro {
namespace {

std::size_t ceil_count(double v) {
  // 2/0.01^2 evaluates to 20000.000000000004; do not round that up.
  const double c = std::ceil(v * (1.0 - 1e-12));
  if (!std::isfinite(c) || c > 1e15) throw ConfigError("spider schedule: batch size overflow");
  return std::max<std::size_t>(1, static_cast<std::size_t>(c));
}

}  // namespace

void SpiderConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (iters == 0) throw ConfigError("iters must be positive");
  if (epoch == 0) throw ConfigError("epoch length T must be positive");
  if (small_batch == 0) throw ConfigError("small batch b must be positive");
  if (large_batch < small_batch) throw ConfigError("large batch B must be >= small batch b");
  if (trace_thin == 0) throw ConfigError("trace thinning must be positive");
}

SpiderSchedule auto_params(double sigma, double L, double M, double tau) {
  if (!(sigma > 0) || !(L > 0) || !(M > 0) || !(tau > 0)) {
    throw ConfigError("auto_params: sigma, L, M and tau must be positive");
  }
  SpiderSchedule s;
  s.large_batch = ceil_count(2.0 * sigma * sigma / (tau * tau));
  s.small_batch = ceil_count(2.0 * L * M * sigma / tau);
  s.epoch = ceil_count(sigma / (L * M * tau));
  return s;
}

double restart_tracker(const LossSpec& spec, const VectorRef& x, const std::vector<DataPoint>& batch) {
  if (batch.empty()) throw ArgumentError("restart_tracker: empty batch");
  double s = 0.0;
  for (const auto& d : batch) s += spec.value(x, d);
  return s / static_cast<double>(batch.size());
}

double refresh_tracker(const LossSpec& spec, double u_prev, const VectorRef& x, const VectorRef& x_prev,
                       const std::vector<DataPoint>& batch) {
  if (batch.empty()) throw ArgumentError("refresh_tracker: empty batch");
  double s = 0.0;
  for (const auto& d : batch) s += spec.value(x, d) - spec.value(x_prev, d);
  return u_prev + s / static_cast<double>(batch.size());
}

RunResult run_spider(const SpiderConfig& cfg, const LossSpec& spec, const Dataset& ds) {
  cfg.validate();
  if (cfg.box.dim() != ds.dim()) throw ArgumentError("box dimension does not match data");
  const RngStream master(cfg.seed);
  RngStream s1 = master.substream(Substream::kD1);
  RngStream s2 = master.substream(Substream::kD2);
  RngStream batch_rng = master.substream(Substream::kBatch);
  RngStream out_rng = master.substream(Substream::kOutput);

  RunResult res;
  res.trace.spider = true;
  res.output_index = out_rng.uniform_index(cfg.iters);

  SpiderState st;
  st.x = initial_point(cfg.box, cfg.x0);
  st.x_prev = st.x;

  for (std::size_t k = 0; k < cfg.iters; ++k) {
    const bool restart = k % cfg.epoch == 0;
    const std::size_t bsz = restart ? cfg.large_batch : cfg.small_batch;
    const auto batch = sample_iid(ds, batch_rng, bsz);
    st.u = restart ? restart_tracker(spec, st.x, batch) : refresh_tracker(spec, st.u, st.x, st.x_prev, batch);
    if (!std::isfinite(st.u)) throw NumericError("non-finite tracker value at iteration " + std::to_string(k));

    if (cfg.observer) cfg.observer(k, st.x, st.u);
    if (k == res.output_index) res.output = st.x;
    const bool record = k % cfg.trace_thin == 0;
    TraceRow row;
    if (record) {
      const Vector l = loss_values(spec, st.x, ds);
      const double h = l.mean();
      row.k = k;
      row.F_hat = h + cfg.risk.kappa * (l.array() - h).max(0.0).mean();
      row.u = st.u;
      row.track_err = std::abs(st.u - h);
      row.epoch = k / cfg.epoch;
      row.batch_size = bsz;
    }

    const DataPoint d1 = draw_point(ds, s1);
    const DataPoint d2 = draw_point(ds, s2);
    const bool gate = spec.value(st.x, d1) >= st.u;
    const double g = gate ? cfg.risk.kappa : 0.0;
    const Vector direction = g * spec.subgradient(st.x, d1) + (1.0 - g) * spec.subgradient(st.x, d2);
    Vector next = projected_step(cfg.box, st.x, cfg.tau, direction);
    if (record) {
      row.step_norm = (next - st.x).norm();
      res.trace.rows.push_back(row);
    }
    st.x_prev = std::move(st.x);
    st.x = std::move(next);
    st.k = k + 1;
  }
  res.final_x = st.x;
  res.final_u = st.u;
  return res;
}

SpiderConstants estimate_constants(const LossSpec& spec, const Dataset& ds, const BoxConstraint& box,
                                   const RiskParams& rp, const VectorRef& x0, RngStream& rng,
                                   std::size_t pilot) {
  if (pilot < 16) throw ConfigError("estimate_constants: pilot must be at least 16");
  if (box.dim() != ds.dim() || static_cast<std::size_t>(x0.size()) != ds.dim()) {
    throw ArgumentError("estimate_constants: dimension mismatch");
  }
  const auto draws = sample_iid(ds, rng, pilot);
  const auto n = static_cast<Eigen::Index>(ds.dim());
  auto random_point = [&] {
    Vector y(n);
    for (Eigen::Index j = 0; j < n; ++j) y[j] = rng.uniform(box.lower()[j], box.upper()[j]);
    return y;
  };
  const double width = (box.upper() - box.lower()).maxCoeff();
  const double probe_step = 1e-6 * std::max(width, 1.0);

  SpiderConstants c;
  // sigma: sample standard deviation of l(x0, D).
  Vector l0(static_cast<Eigen::Index>(pilot));
  for (std::size_t i = 0; i < pilot; ++i) l0[static_cast<Eigen::Index>(i)] = spec.value(x0, draws[i]);
  const double mean = l0.mean();
  const double var = (l0.array() - mean).square().sum() / static_cast<double>(pilot - 1);
  c.sigma = std::max(std::sqrt(var), DBL_EPSILON);

  double ratio = 0.0;
  double dmax = 0.0;
  auto pair_ratio = [&](const Vector& x, const Vector& y, const DataPoint& d) {
    const double dist = (x - y).norm();
    if (dist > 0) ratio = std::max(ratio, std::abs(spec.value(x, d) - spec.value(y, d)) / dist);
  };
  for (const auto& d : draws) {
    const Vector x = x0;
    const Vector y = random_point();
    const Vector z = random_point();
    pair_ratio(y, z, d);
    for (const Vector* p : {&x, &y}) {
      const Vector g = spec.subgradient(*p, d);
      const double gn = g.norm();
      dmax = std::max(dmax, gn);
      if (gn > 0) pair_ratio(*p, project(box, *p + (probe_step / gn) * g), d);
    }
  }
  c.lipschitz = std::max(1.5 * ratio, DBL_EPSILON);
  c.delta_h = dmax;
  c.delta_fx = rp.kappa * dmax;
  const double s = c.sigma;
  const double m2 = (c.delta_fx + c.delta_h) * (c.delta_fx + c.delta_h) + 2 * s * s + 2 * s * c.delta_h;
  c.M = std::max(std::sqrt(m2), DBL_EPSILON);
  return c;
}

double spider_mse_bound(const SpiderConstants& c, const SpiderSchedule& s, double tau) {
  const double B = static_cast<double>(s.large_batch);
  const double b = static_cast<double>(s.small_batch);
  const double T = static_cast<double>(s.epoch);
  return c.sigma * c.sigma / B + T * c.lipschitz * c.lipschitz * c.M * c.M * tau * tau / b;
}

}  // namespace scsdro
