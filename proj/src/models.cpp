#include "scsdro/models.hpp"

#include <algorithm>
#include <cmath>

namespace scsdro {
namespace {

double scad_scalar(double t, double lam, double gam) {
  const double a = std::abs(t);
  if (a <= lam) return lam * a;
  if (a <= lam * gam) return (gam * lam * a - 0.5 * (a * a + lam * lam)) / (gam - 1.0);
  return lam * lam * (gam + 1.0) / 2.0;
}

double scad_deriv(double t, double lam, double gam) {
  const double a = std::abs(t);
  if (a == 0.0) return 0.0;
  const double s = t > 0 ? 1.0 : -1.0;
  if (a <= lam) return s * lam;
  if (a <= lam * gam) return s * (gam * lam - a) / (gam - 1.0);
  return 0.0;
}

double mcp_scalar(double t, double lam, double gam) {
  const double a = std::abs(t);
  if (a <= lam * gam) return lam * a - a * a / (2.0 * gam);
  return lam * lam * gam / 2.0;
}

double mcp_deriv(double t, double lam, double gam) {
  const double a = std::abs(t);
  if (a == 0.0) return 0.0;
  const double s = t > 0 ? 1.0 : -1.0;
  if (a <= lam * gam) return s * (lam - a / gam);
  return 0.0;
}

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double label(double b) { return b > 0 ? 1.0 : -1.0; }

void check_dim(const VectorRef& x, Eigen::Index d) {
  if (x.size() != d) {
    throw ArgumentError("loss: dimension mismatch (x has " + std::to_string(x.size()) + ", features " +
                        std::to_string(d) + ")");
  }
}

}  // namespace

void validate_penalty(PenaltyKind kind, const PenaltyParams& p) {
  if (kind == PenaltyKind::kNone) return;
  if (!(p.lambda > 0) || !std::isfinite(p.lambda)) throw ConfigError("penalty: lambda must be > 0");
  if (kind == PenaltyKind::kScad && !(p.gamma > 1.0 && std::isfinite(p.gamma))) {
    throw ConfigError("penalty: SCAD requires gamma > 1");
  }
  if (kind == PenaltyKind::kMcp && !(p.gamma > 0.0 && std::isfinite(p.gamma))) {
    throw ConfigError("penalty: MCP requires gamma > 0");
  }
}

double penalty_value(PenaltyKind kind, const PenaltyParams& p, const VectorRef& x) {
  validate_penalty(kind, p);
  double s = 0.0;
  switch (kind) {
    case PenaltyKind::kNone:
      return 0.0;
    case PenaltyKind::kLasso:
      return p.lambda * x.lpNorm<1>();
    case PenaltyKind::kScad:
      for (Eigen::Index j = 0; j < x.size(); ++j) s += scad_scalar(x[j], p.lambda, p.gamma);
      return s;
    case PenaltyKind::kMcp:
      for (Eigen::Index j = 0; j < x.size(); ++j) s += mcp_scalar(x[j], p.lambda, p.gamma);
      return s;
  }
  return s;
}

Vector penalty_subgradient(PenaltyKind kind, const PenaltyParams& p, const VectorRef& x) {
  validate_penalty(kind, p);
  Vector g = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    switch (kind) {
      case PenaltyKind::kNone:
        break;
      case PenaltyKind::kLasso:
        g[j] = x[j] > 0 ? p.lambda : (x[j] < 0 ? -p.lambda : 0.0);
        break;
      case PenaltyKind::kScad:
        g[j] = scad_deriv(x[j], p.lambda, p.gamma);
        break;
      case PenaltyKind::kMcp:
        g[j] = mcp_deriv(x[j], p.lambda, p.gamma);
        break;
    }
  }
  return g;
}

LossSpec::LossSpec(BaseLoss base, PenaltyKind penalty, PenaltyParams params)
    : base_(base), penalty_(penalty), params_(params) {
  validate_penalty(penalty_, params_);
}

double LossSpec::base_from_margin(double z, double b) const {
  switch (base_) {
    case BaseLoss::kMad:
      return std::abs(z - b);
    case BaseLoss::kLeastSquares:
      return (z - b) * (z - b);
    case BaseLoss::kLogistic:
      return softplus(-label(b) * z);
  }
  return 0.0;
}

double LossSpec::base_value(const VectorRef& x, const DataPoint& d) const {
  check_dim(x, d.features.size());
  return base_from_margin(d.features.dot(x), d.target);
}

double LossSpec::value(const VectorRef& x, const DataPoint& d) const {
  return base_value(x, d) + penalty_value(penalty_, params_, x);
}

double LossSpec::value(const VectorRef& x, const Dataset& ds, std::size_t i) const {
  check_dim(x, static_cast<Eigen::Index>(ds.dim()));
  const double z = ds.feature_matrix().row(static_cast<Eigen::Index>(i)).dot(x);
  return base_from_margin(z, ds.target(i)) + penalty_value(penalty_, params_, x);
}

namespace {
// d base / d z at margin z.
double margin_derivative(BaseLoss base, double z, double b) {
  switch (base) {
    case BaseLoss::kMad: {
      const double r = z - b;
      return r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
    }
    case BaseLoss::kLeastSquares:
      return 2.0 * (z - b);
    case BaseLoss::kLogistic: {
      const double y = label(b);
      return -y * sigmoid(-y * z);
    }
  }
  return 0.0;
}
}  // namespace

Vector LossSpec::subgradient(const VectorRef& x, const DataPoint& d) const {
  check_dim(x, d.features.size());
  const double s = margin_derivative(base_, d.features.dot(x), d.target);
  return s * d.features + penalty_subgradient(penalty_, params_, x);
}

Vector LossSpec::subgradient(const VectorRef& x, const Dataset& ds, std::size_t i) const {
  check_dim(x, static_cast<Eigen::Index>(ds.dim()));
  const auto a = ds.feature_matrix().row(static_cast<Eigen::Index>(i));
  const double s = margin_derivative(base_, a.dot(x), ds.target(i));
  return s * a.transpose() + penalty_subgradient(penalty_, params_, x);
}

Vector LossSpec::feature_gradient(const VectorRef& x, const DataPoint& d) const {
  check_dim(x, d.features.size());
  return margin_derivative(base_, d.features.dot(x), d.target) * x;
}

double LossSpec::weak_convexity_modulus() const {
  switch (penalty_) {
    case PenaltyKind::kScad:
      return 1.0 / (params_.gamma - 1.0);
    case PenaltyKind::kMcp:
      return 1.0 / params_.gamma;
    default:
      return 0.0;
  }
}

double LossSpec::smoothness_modulus(const Dataset& ds) const {
  if (base_ == BaseLoss::kMad) return 0.0;
  const double max_sq = ds.feature_matrix().rowwise().squaredNorm().maxCoeff();
  return base_ == BaseLoss::kLeastSquares ? 2.0 * max_sq : 0.25 * max_sq;
}

double LossSpec::lipschitz_bound(const Dataset& ds, const BoxConstraint& box) const {
  if (box.dim() != ds.dim()) throw ArgumentError("lipschitz_bound: box/data dimension mismatch");
  const Vector reach = box.lower().cwiseAbs().cwiseMax(box.upper().cwiseAbs());
  double best = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto a = ds.feature_matrix().row(static_cast<Eigen::Index>(i));
    const double na = a.norm();
    double li = na;
    if (base_ == BaseLoss::kLeastSquares) {
      const double rmax = a.cwiseAbs().dot(reach.transpose()) + std::abs(ds.target(i));
      li = 2.0 * na * rmax;
    }
    best = std::max(best, li);
  }
  if (penalty_ != PenaltyKind::kNone) best += params_.lambda * std::sqrt(static_cast<double>(ds.dim()));
  return best;
}

BaseLoss parse_base_loss(const std::string& name) {
  if (name == "mad") return BaseLoss::kMad;
  if (name == "ls" || name == "least-squares" || name == "least_squares") return BaseLoss::kLeastSquares;
  if (name == "logistic") return BaseLoss::kLogistic;
  throw ConfigError("unknown loss '" + name + "' (expected mad, least-squares, logistic)");
}

PenaltyKind parse_penalty(const std::string& name) {
  if (name == "none") return PenaltyKind::kNone;
  if (name == "lasso") return PenaltyKind::kLasso;
  if (name == "scad") return PenaltyKind::kScad;
  if (name == "mcp") return PenaltyKind::kMcp;
  throw ConfigError("unknown penalty '" + name + "' (expected none, lasso, scad, mcp)");
}

std::string to_string(BaseLoss b) {
  switch (b) {
    case BaseLoss::kMad:
      return "mad";
    case BaseLoss::kLeastSquares:
      return "least-squares";
    case BaseLoss::kLogistic:
      return "logistic";
  }
  return "?";
}

std::string to_string(PenaltyKind p) {
  switch (p) {
    case PenaltyKind::kNone:
      return "none";
    case PenaltyKind::kLasso:
      return "lasso";
    case PenaltyKind::kScad:
      return "scad";
    case PenaltyKind::kMcp:
      return "mcp";
  }
  return "?";
}

}  // namespace scsdro
