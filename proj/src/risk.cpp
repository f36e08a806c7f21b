#include "scsdro/risk.hpp"

#include <cmath>

namespace scsdro {

RiskParams::RiskParams(double k) : kappa(k) {
  if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("kappa must lie in [0, 1]");
}

FiniteDistribution::FiniteDistribution(Vector values, Vector probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
  if (values_.size() == 0) throw ArgumentError("distribution: empty support");
  if (values_.size() != probs_.size()) throw ArgumentError("distribution: values/probs length mismatch");
  if (!values_.allFinite() || !probs_.allFinite()) throw ArgumentError("distribution: non-finite entry");
  if ((probs_.array() < 0.0).any()) throw ArgumentError("distribution: negative probability");
  if (std::abs(probs_.sum() - 1.0) > 1e-12) throw ArgumentError("distribution: probabilities do not sum to 1");
}

FiniteDistribution FiniteDistribution::uniform(Vector values) {
  const auto n = values.size();
  if (n == 0) throw ArgumentError("distribution: empty support");
  return FiniteDistribution(std::move(values), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

double mean_semideviation(const FiniteDistribution& d, const RiskParams& rp) {
  const double m = d.mean();
  const double upper = d.probs().dot((d.values().array() - m).max(0.0).matrix());
  return m + rp.kappa * upper;
}

namespace {

struct Vertex {
  double value;
  std::uint32_t mask;
};

Vertex best_vertex(const FiniteDistribution& d, const RiskParams& rp) {
  const std::size_t n = d.size();
  if (n > kOracleMaxSupport) {
    throw CapacityError("dual oracle: support " + std::to_string(n) + " exceeds " +
                        std::to_string(kOracleMaxSupport));
  }
  const Vector& z = d.values();
  const Vector& p = d.probs();
  const double ez = d.mean();
  // E[Z(1 + xi - E xi)] = E Z + kappa * sum_{i in S} p_i (z_i - E Z).
  Vertex best{-INFINITY, 0};
  const std::uint32_t count = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double gain = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint32_t{1} << i)) gain += p[static_cast<Eigen::Index>(i)] * (z[static_cast<Eigen::Index>(i)] - ez);
    }
    const double v = ez + rp.kappa * gain;
    if (v > best.value) best = {v, mask};
  }
  return best;
}

}  // namespace

double dual_value_oracle(const FiniteDistribution& d, const RiskParams& rp) { return best_vertex(d, rp).value; }

Vector worst_case_distortion(const FiniteDistribution& d, const RiskParams& rp) {
  const auto v = best_vertex(d, rp);
  const auto n = static_cast<Eigen::Index>(d.size());
  Vector xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = (v.mask & (std::uint32_t{1} << i)) ? rp.kappa : 0.0;
  const double exi = d.probs().dot(xi);
  return (xi.array() + 1.0 - exi).matrix();
}

Vector loss_values(const LossSpec& spec, const VectorRef& x, const Dataset& ds) {
  Vector out(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) out[static_cast<Eigen::Index>(i)] = spec.value(x, ds, i);
  return out;
}

double inner_value(const LossSpec& spec, const VectorRef& x, const Dataset& ds) {
  return loss_values(spec, x, ds).mean();
}

double outer_value(const LossSpec& spec, const VectorRef& x, double u, const Dataset& ds, const RiskParams& rp) {
  const Vector l = loss_values(spec, x, ds);
  return u + rp.kappa * (l.array() - u).max(0.0).mean();
}

double composite_objective(const LossSpec& spec, const VectorRef& x, const Dataset& ds, const RiskParams& rp) {
  const Vector l = loss_values(spec, x, ds);
  const double h = l.mean();
  return h + rp.kappa * (l.array() - h).max(0.0).mean();
}

}  // namespace scsdro
