#include "scsdro/scs.hpp"

#include <cmath>

namespace scsdro {

void ScsConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (iters == 0) throw ConfigError("iters must be positive");
  if (trace_thin == 0) throw ConfigError("trace thinning must be positive");
  if (pilot_batch == 0) throw ConfigError("pilot batch must be positive");
}

Vector GatedEstimates::direction() const { return g_fx + g_fu * g_h; }

GatedEstimates gated_estimates(const LossSpec& spec, const VectorRef& x, double u, const RiskParams& rp,
                               const DataPoint& d1, const DataPoint& d2, const DataPoint& d3) {
  GatedEstimates e;
  const double l1 = spec.value(x, d1);
  const double l2 = spec.value(x, d2);
  const double l3 = spec.value(x, d3);
  e.indicator = l1 >= u;
  e.G = spec.subgradient(x, d1);
  const double gate = e.indicator ? rp.kappa : 0.0;
  e.g_fx = gate * e.G;
  e.g_fu = 1.0 - gate;
  e.g_h = spec.subgradient(x, d2);
  e.J = spec.subgradient(x, d3);
  e.h_tilde = (l1 + l2 + l3) / 3.0;
  return e;
}

double tracker_update(double u, double tau, double h_tilde, const VectorRef& J, const VectorRef& x_new,
                      const VectorRef& x_old) {
  return u + tau * (h_tilde - u) + J.dot(x_new - x_old);
}

Vector projected_step(const BoxConstraint& box, const VectorRef& x, double tau, const VectorRef& direction) {
  if (!all_finite(direction)) throw NumericError("non-finite search direction");
  Vector moved = x - tau * direction;
  return project(box, moved);
}

ScsState step(const ScsConfig& cfg, const ScsState& state, const GatedEstimates& est) {
  ScsState next;
  next.x = projected_step(cfg.box, state.x, cfg.tau, est.direction());
  next.u = tracker_update(state.u, cfg.tau, est.h_tilde, est.J, next.x, state.x);
  if (!std::isfinite(next.u)) throw NumericError("non-finite tracker value at iteration " + std::to_string(state.k));
  next.k = state.k + 1;
  return next;
}

Vector initial_point(const BoxConstraint& box, const std::optional<Vector>& guess) {
  if (guess) return project(box, *guess);
  return 0.5 * (box.lower() + box.upper());
}

DataPoint draw_point(const Dataset& ds, RngStream& rng) { return ds.point(rng.uniform_index(ds.size())); }

RunResult run_scs(const ScsConfig& cfg, const LossSpec& spec, const Dataset& ds) {
  cfg.validate();
  if (cfg.box.dim() != ds.dim()) throw ArgumentError("box dimension does not match data");
  const RngStream master(cfg.seed);
  RngStream pilot = master.substream(Substream::kPilot);
  RngStream s1 = master.substream(Substream::kD1);
  RngStream s2 = master.substream(Substream::kD2);
  RngStream s3 = master.substream(Substream::kD3);
  RngStream out_rng = master.substream(Substream::kOutput);

  RunResult res;
  res.output_index = out_rng.uniform_index(cfg.iters);

  ScsState st;
  st.x = initial_point(cfg.box, cfg.x0);
  double u0 = 0.0;
  for (std::size_t i = 0; i < cfg.pilot_batch; ++i) u0 += spec.value(st.x, draw_point(ds, pilot));
  st.u = u0 / static_cast<double>(cfg.pilot_batch);

  for (std::size_t k = 0; k < cfg.iters; ++k) {
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
    }
    const DataPoint d1 = draw_point(ds, s1);
    const DataPoint d2 = draw_point(ds, s2);
    const DataPoint d3 = draw_point(ds, s3);
    const auto est = gated_estimates(spec, st.x, st.u, cfg.risk, d1, d2, d3);
    ScsState next = step(cfg, st, est);
    if (record) {
      row.step_norm = (next.x - st.x).norm();
      res.trace.rows.push_back(row);
    }
    st = std::move(next);
  }
  res.final_x = st.x;
  res.final_u = st.u;
  return res;
}

}  // namespace scsdro
