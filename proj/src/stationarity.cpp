#include "scsdro/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace scsdro {

double rho(double kappa, double delta) { return (1.0 + 2.0 * kappa) * delta; }

double rho_bar(double kappa, double delta) { return rho(kappa, delta) + (1.0 + kappa) * delta; }

MoreauProbe MoreauProbe::standard(const LossSpec& spec, const RiskParams& rp, std::optional<double> delta) {
  MoreauProbe p;
  p.delta = delta;
  const double rb = rho_bar(rp.kappa, delta.value_or(spec.weak_convexity_modulus()));
  p.lambda = rb > 0 ? 1.0 / rb : 1.0;
  return p;
}

namespace {

// Small fixed-capacity linear algebra for the per-sample blocks.
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

// Epigraph reformulation. The penalty is written r(y) = lam*|y| - c(y) with
// c convex and C^1; lam*|y| goes into q_j >= |y_j| and -c stays in the
// smooth core objective.
//
//   min  sum p t + kappa sum p e + lam sum q - sum c(y_j) + ||y - x||^2/(2 l)
//   s.t. t_i >= base_i(y),  e_i >= t_i - h,  e_i >= 0,  h = sum p t,
//        q_j >= |y_j|,  lower <= y <= upper.
//
// Each sample (and each penalised coordinate) owns a block of local
// variables l with slacks s = U l + G (zeta, h) + const, zeta = a^T y - off.
// Local blocks are eliminated per block; the coupling curvature comes from a
// null-space basis Z of U^T so that large slacks never swamp small ones.
struct Shape {
  SMat U;
  SMat Z;
  SMat Upinv;  // U (U^T U)^{-1}
};

Shape make_shape(std::initializer_list<std::initializer_list<double>> u_rows,
                 std::initializer_list<std::initializer_list<double>> z_cols) {
  Shape sh;
  const auto k = static_cast<Eigen::Index>(u_rows.size());
  const auto L = static_cast<Eigen::Index>(u_rows.begin()->size());
  sh.U.resize(k, L);
  Eigen::Index r = 0;
  for (const auto& row : u_rows) {
    Eigen::Index c = 0;
    for (double v : row) sh.U(r, c++) = v;
    ++r;
  }
  sh.Z.resize(k, static_cast<Eigen::Index>(z_cols.size()));
  Eigen::Index c = 0;
  for (const auto& col : z_cols) {
    Eigen::Index rr = 0;
    for (double v : col) sh.Z(rr++, c) = v;
    ++c;
  }
  const SMat utu_inv = (sh.U.transpose() * sh.U).inverse();
  sh.Upinv = sh.U * utu_inv;
  return sh;
}

const Shape& shape_pair() {  // q >= |zeta| or t >= |zeta|
  static const Shape s = make_shape({{1}, {1}}, {{1, -1}});
  return s;
}
const Shape& shape_mad_risk() {  // (t, e)
  static const Shape s = make_shape({{1, 0}, {1, 0}, {-1, 1}, {0, 1}}, {{1, -1, 0, 0}, {1, 0, 1, -1}});
  return s;
}
const Shape& shape_smooth() {  // t
  static const Shape s = make_shape({{1}}, {});
  return s;
}
const Shape& shape_smooth_risk() {  // (t, e)
  static const Shape s = make_shape({{1, 0}, {-1, 1}, {0, 1}}, {{1, 1, -1}});
  return s;
}

// Weighted least squares min ||S^-1 (U l - v)||, i.e. (U^T D U)^{-1} U^T D v
// with D = S^-2. Written as an average of the exact solutions on every
// square row subset, weighted by their (scaled) Cauchy-Binet terms, so the
// result carries no cancellation when the slacks span many magnitudes.
SVec weighted_solve(const SMat& U, const SVec& s, const SVec& v) {
  const auto k = U.rows();
  const double smin = s.minCoeff();
  SVec w(k);
  for (Eigen::Index c = 0; c < k; ++c) w[c] = (smin / s[c]) * (smin / s[c]);
  SVec out = SVec::Zero(U.cols());
  double den = 0;
  if (U.cols() == 1) {
    for (Eigen::Index c = 0; c < k; ++c) {
      if (U(c, 0) == 0) continue;
      const double wt = w[c] * U(c, 0) * U(c, 0);
      out[0] += wt * (v[c] / U(c, 0));
      den += wt;
    }
    return out / den;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index d = c + 1; d < k; ++d) {
      const double minor = U(c, 0) * U(d, 1) - U(d, 0) * U(c, 1);
      if (minor == 0) continue;
      const double wt = w[c] * w[d] * minor * minor;
      out[0] += wt * (v[c] * U(d, 1) - v[d] * U(c, 1)) / minor;
      out[1] += wt * (U(c, 0) * v[d] - U(d, 0) * v[c]) / minor;
      den += wt;
    }
  }
  return out / den;
}

// W = Z (Z^T S^2 Z)^{-1} Z^T as a sum of rank-one terms coef_c m_c m_c^T.
// For two null-space columns m_c holds the 2x2 minors of Z against row c.
struct RankTerms {
  std::vector<double> coef;
  std::vector<SVec> vec;

  double quad(const SVec& g, const SVec& h) const {
    double acc = 0;
    for (std::size_t i = 0; i < coef.size(); ++i) acc += coef[i] * vec[i].dot(g) * vec[i].dot(h);
    return acc;
  }
};

RankTerms null_space_terms(const SMat& Z, const SVec& s) {
  RankTerms t;
  const auto k = Z.rows();
  if (Z.cols() == 0) return t;
  const double smax = s.maxCoeff();
  SVec a(k);
  for (Eigen::Index c = 0; c < k; ++c) a[c] = (s[c] / smax) * (s[c] / smax);
  const double scale = 1.0 / (smax * smax);
  if (Z.cols() == 1) {
    double den = 0;
    for (Eigen::Index c = 0; c < k; ++c) den += a[c] * Z(c, 0) * Z(c, 0);
    t.coef.push_back(scale / den);
    t.vec.push_back(Z.col(0));
    return t;
  }
  double den = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index d = c + 1; d < k; ++d) {
      const double minor = Z(c, 0) * Z(d, 1) - Z(d, 0) * Z(c, 1);
      den += a[c] * a[d] * minor * minor;
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    SVec m(k);
    for (Eigen::Index p = 0; p < k; ++p) m[p] = Z(p, 0) * Z(c, 1) - Z(p, 1) * Z(c, 0);
    t.coef.push_back(scale * a[c] / den);
    t.vec.push_back(m);
  }
  return t;
}

enum class BlockType { kPair, kMadRisk, kSmooth, kSmoothRisk };

struct Block {
  BlockType type;
  const Shape* shape;
  std::size_t index;   // sample index, or coordinate for penalty blocks
  bool penalty;
  SVec local;
  SVec slack;
  SVec obj;    // objective coefficients of the local variables
  SVec eq;     // coefficients in the equality row h - sum p t = 0
  // per-iteration cache
  SVec g_res, g_h, dslack, dlocal;
  SVec l_r, l_a, l_gr, l_gh;  // weighted solves for residual, equality, couplings
  double zeta = 0, d2 = 0;  // coupling value and base curvature (smooth)
};

// Smooth bases as functions of zeta.
struct SmoothBase {
  BaseLoss base;
  double label;  // logistic only

  double value(double z) const {
    if (base == BaseLoss::kLeastSquares) return z * z;
    const double v = -label * z;
    return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
  double d1(double z) const {
    if (base == BaseLoss::kLeastSquares) return 2 * z;
    return -label * sig(-label * z);
  }
  double d2v(double z) const {
    if (base == BaseLoss::kLeastSquares) return 2.0;
    const double s = sig(-label * z);
    return s * (1 - s);
  }
  // value(z + d) - value(z) - d1(z) d, without cancellation for small d.
  double bregman(double z, double d) const {
    if (base == BaseLoss::kLeastSquares) return d * d;
    const double v = -label * z;
    const double dv = -label * d;
    const double s = sig(v);
    if (dv > 30) return value(z + d) - value(z) - s * dv;
    return std::log1p(s * std::expm1(dv)) - s * dv;
  }
  static double sig(double v) {
    if (v >= 0) return 1 / (1 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1 + e);
  }
};

// Concave part of the penalty: r = lam|y| - c(y).
struct PenaltySplit {
  PenaltyKind kind;
  double lam, gam;

  double c(double y) const {
    const double a = std::abs(y);
    switch (kind) {
      case PenaltyKind::kScad:
        if (a <= lam) return 0;
        if (a <= lam * gam) return (a - lam) * (a - lam) / (2 * (gam - 1));
        return lam * a - lam * lam * (gam + 1) / 2;
      case PenaltyKind::kMcp:
        if (a <= lam * gam) return y * y / (2 * gam);
        return lam * a - lam * lam * gam / 2;
      default:
        return 0;
    }
  }
  double c1(double y) const {
    const double a = std::abs(y);
    const double sg = y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0);
    switch (kind) {
      case PenaltyKind::kScad:
        if (a <= lam) return 0;
        if (a <= lam * gam) return sg * (a - lam) / (gam - 1);
        return sg * lam;
      case PenaltyKind::kMcp:
        if (a <= lam * gam) return y / gam;
        return sg * lam;
      default:
        return 0;
    }
  }
  double c2(double y) const {
    const double a = std::abs(y);
    switch (kind) {
      case PenaltyKind::kScad:
        return (a > lam && a <= lam * gam) ? 1 / (gam - 1) : 0;
      case PenaltyKind::kMcp:
        return a <= lam * gam ? 1 / gam : 0;
      default:
        return 0;
    }
  }
};

class BarrierProx {
 public:
  BarrierProx(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds, const RiskParams& rp,
              const BoxConstraint& box, const VectorRef& x)
      : probe_(probe), spec_(spec), ds_(ds), rp_(rp), box_(box), x_(x) {
    n_ = static_cast<Eigen::Index>(ds.dim());
    risk_ = rp.kappa > 0;
    nc_ = n_ + (risk_ ? 1 : 0);
    pen_ = PenaltySplit{spec.penalty(), spec.params().lambda, spec.params().gamma};
    mad_ = spec.base() == BaseLoss::kMad;
    p_ = 1.0 / static_cast<double>(ds.size());
    init();
  }

  ProxResult solve();

 private:
  void init();
  double zeta_of(const Block& b, const Vector& y) const;
  void assemble_and_solve(double sb);
  double decrement_sq(double sb) const;
  bool trial(double alpha, double sb, double& dpsi) const;
  void apply(double alpha);

  const MoreauProbe& probe_;
  const LossSpec& spec_;
  const Dataset& ds_;
  const RiskParams& rp_;
  const BoxConstraint& box_;
  Vector x_;
  Eigen::Index n_ = 0, nc_ = 0;
  bool risk_ = false, mad_ = true;
  double p_ = 1.0;
  PenaltySplit pen_{};

  Vector y_;
  double h_ = 0;
  double nu_ = 0;   // multiplier of h = sum p t
  Vector sl_, su_;  // box slacks
  std::vector<Block> blocks_;
  std::size_t m_ = 0;  // number of inequality constraints

  // Newton step
  Vector dy_;
  double dh_ = 0;
};

double BarrierProx::zeta_of(const Block& b, const Vector& y) const {
  if (b.penalty) return y[static_cast<Eigen::Index>(b.index)];
  const double z = ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index)).dot(y);
  return spec_.base() == BaseLoss::kLogistic ? z : z - ds_.target(b.index);
}

void BarrierProx::init() {
  const Vector w = box_.upper() - box_.lower();
  if ((w.array() <= 0).any()) throw ArgumentError("prox: every box coordinate needs positive width");
  if (x_.size() != n_) throw ArgumentError("prox: dimension mismatch");
  y_ = x_.cwiseMax(box_.lower() + 0.01 * w).cwiseMin(box_.upper() - 0.01 * w);
  sl_ = y_ - box_.lower();
  su_ = box_.upper() - y_;
  m_ = 2 * static_cast<std::size_t>(n_);

  for (std::size_t i = 0; i < ds_.size(); ++i) {
    Block b;
    b.index = i;
    b.penalty = false;
    b.zeta = zeta_of(b, y_);
    const SmoothBase sbase{spec_.base(), ds_.target(i) > 0 ? 1.0 : -1.0};
    const double base = mad_ ? std::abs(b.zeta) : sbase.value(b.zeta);
    const double t = base + 1.0;
    if (mad_) {
      b.type = risk_ ? BlockType::kMadRisk : BlockType::kPair;
      b.shape = risk_ ? &shape_mad_risk() : &shape_pair();
    } else {
      b.type = risk_ ? BlockType::kSmoothRisk : BlockType::kSmooth;
      b.shape = risk_ ? &shape_smooth_risk() : &shape_smooth();
    }
    const auto L = b.shape->U.cols();
    b.local.resize(L);
    b.local[0] = t;
    b.obj.resize(L);
    b.obj[0] = p_;
    b.eq = SVec::Zero(L);
    if (risk_) {
      b.obj[1] = rp_.kappa * p_;
      b.eq[0] = -p_;
    }
    blocks_.push_back(b);
  }
  h_ = 0;
  if (risk_) {
    for (const auto& b : blocks_) h_ += p_ * b.local[0];
    for (auto& b : blocks_) b.local[1] = std::max(b.local[0] - h_, 0.0) + 1.0;
  }
  for (auto& b : blocks_) {
    const double t = b.local[0];
    const SmoothBase sbase{spec_.base(), ds_.target(b.index) > 0 ? 1.0 : -1.0};
    switch (b.type) {
      case BlockType::kPair:
        b.slack.resize(2);
        b.slack << t - b.zeta, t + b.zeta;
        break;
      case BlockType::kMadRisk:
        b.slack.resize(4);
        b.slack << t - b.zeta, t + b.zeta, b.local[1] - t + h_, b.local[1];
        break;
      case BlockType::kSmooth:
        b.slack.resize(1);
        b.slack << t - sbase.value(b.zeta);
        break;
      case BlockType::kSmoothRisk:
        b.slack.resize(3);
        b.slack << t - sbase.value(b.zeta), b.local[1] - t + h_, b.local[1];
        break;
    }
    m_ += static_cast<std::size_t>(b.slack.size());
  }
  if (spec_.penalty() != PenaltyKind::kNone) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      Block b;
      b.type = BlockType::kPair;
      b.shape = &shape_pair();
      b.index = static_cast<std::size_t>(j);
      b.penalty = true;
      b.zeta = y_[j];
      b.local.resize(1);
      b.local[0] = std::abs(y_[j]) + 1.0;
      b.obj.resize(1);
      b.obj[0] = spec_.params().lambda;
      b.eq = SVec::Zero(1);
      b.slack.resize(2);
      b.slack << b.local[0] - b.zeta, b.local[0] + b.zeta;
      blocks_.push_back(b);
      m_ += 2;
    }
  }
}

void BarrierProx::assemble_and_solve(double sb) {
  const Eigen::Index dim = nc_ + (risk_ ? 1 : 0);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  const double inv_l = 1.0 / probe_.lambda;
  const Eigen::Index hi = n_;      // index of h in the core
  const Eigen::Index ni = nc_;     // index of nu

  for (Eigen::Index j = 0; j < n_; ++j) {
    K(j, j) += sb * (inv_l - pen_.c2(y_[j])) + 1.0 / (sl_[j] * sl_[j]) + 1.0 / (su_[j] * su_[j]);
    rhs[j] -= sb * ((y_[j] - x_[j]) * inv_l - pen_.c1(y_[j])) - 1.0 / sl_[j] + 1.0 / su_[j];
  }
  if (risk_) {
    K(hi, ni) = 1.0;
    K(ni, hi) = 1.0;
    double t_sum = 0;
    for (const auto& b : blocks_) {
      if (!b.penalty) t_sum += p_ * b.local[0];
    }
    rhs[ni] = -(h_ - t_sum);
    rhs[hi] -= nu_;
  }

  for (auto& b : blocks_) {
    const Shape& sh = *b.shape;
    const auto k = b.slack.size();
    b.zeta = zeta_of(b, y_);
    b.g_res = SVec::Zero(k);
    b.g_h = SVec::Zero(k);
    switch (b.type) {
      case BlockType::kPair:
        b.g_res << -1, 1;
        break;
      case BlockType::kMadRisk:
        b.g_res << -1, 1, 0, 0;
        b.g_h << 0, 0, 1, 0;
        break;
      case BlockType::kSmooth:
      case BlockType::kSmoothRisk: {
        const SmoothBase sbase{spec_.base(), ds_.target(b.index) > 0 ? 1.0 : -1.0};
        b.g_res[0] = -sbase.d1(b.zeta);
        b.d2 = sbase.d2v(b.zeta);
        if (b.type == BlockType::kSmoothRisk) b.g_h[1] = 1;
        break;
      }
    }
    const SVec s2 = b.slack.cwiseProduct(b.slack);
    const RankTerms W = null_space_terms(sh.Z, b.slack);
    // Linearise around the barrier multipliers 1/s and nu_. Eliminating the
    // local step gives dl = -(U^T D U)^{-1} (r + dnu a + U^T D g dc).
    const SVec lam_bar = b.slack.cwiseInverse();
    const SVec r = sb * b.obj + nu_ * b.eq - sh.U.transpose() * lam_bar;
    b.l_r = weighted_solve(sh.U, b.slack, s2.cwiseProduct(sh.Upinv * r));
    b.l_a = weighted_solve(sh.U, b.slack, s2.cwiseProduct(sh.Upinv * b.eq));
    b.l_gr = weighted_solve(sh.U, b.slack, b.g_res);
    b.l_gh = weighted_solve(sh.U, b.slack, b.g_h);
    // D U l_r and D U l_a, i.e. the multiplier corrections.
    const SVec mult0 = lam_bar + (sh.U * b.l_r).cwiseQuotient(s2);
    const SVec mult1 = (sh.U * b.l_a).cwiseQuotient(s2);

    const double grr = W.quad(b.g_res, b.g_res);
    const double grh = W.quad(b.g_res, b.g_h);
    const double ghh = W.quad(b.g_h, b.g_h);
    const double r0 = b.g_res.dot(mult0);
    const double r1 = b.g_res.dot(mult1);

    if (b.penalty) {
      const auto j = static_cast<Eigen::Index>(b.index);
      K(j, j) += grr;
      rhs[j] += r0;
    } else {
      const auto a = ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index));
      double curv = grr;
      if (b.type == BlockType::kSmooth || b.type == BlockType::kSmoothRisk) curv += b.d2 / b.slack[0];
      K.topLeftCorner(n_, n_).noalias() += curv * a.transpose() * a;
      rhs.head(n_) += r0 * a.transpose();
      if (risk_) {
        K.block(0, hi, n_, 1) += grh * a.transpose();
        K.block(hi, 0, 1, n_) += grh * a;
        K(hi, hi) += ghh;
        rhs[hi] += b.g_h.dot(mult0);
        K.block(0, ni, n_, 1) -= r1 * a.transpose();
        K(hi, ni) -= b.g_h.dot(mult1);
        K.block(ni, 0, 1, n_) -= b.eq.dot(b.l_gr) * a;
        K(ni, hi) -= b.eq.dot(b.l_gh);
        K(ni, ni) -= b.eq.dot(b.l_a);
        rhs[ni] += b.eq.dot(b.l_r);
      }
    }
  }

  const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  if (!sol.allFinite()) throw NumericError("prox: singular Newton system");
  dy_ = sol.head(n_);
  dh_ = risk_ ? sol[hi] : 0.0;
  const double dnu = risk_ ? sol[ni] : 0.0;
  nu_ += dnu;

  for (auto& b : blocks_) {
    const double dz = b.penalty ? dy_[static_cast<Eigen::Index>(b.index)]
                                : ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index)).dot(dy_);
    const SVec gd = b.g_res * dz + b.g_h * dh_;
    b.dlocal = -(b.l_r + dnu * b.l_a + b.l_gr * dz + b.l_gh * dh_);
    b.dslack = b.shape->U * b.dlocal + gd;
  }
}

double BarrierProx::decrement_sq(double sb) const {
  double d = 0;
  for (Eigen::Index j = 0; j < n_; ++j) {
    d += sb * (1.0 / probe_.lambda - pen_.c2(y_[j])) * dy_[j] * dy_[j];
    d += std::pow(dy_[j] / sl_[j], 2) + std::pow(dy_[j] / su_[j], 2);
  }
  for (const auto& b : blocks_) {
    d += b.dslack.cwiseQuotient(b.slack).squaredNorm();
    if (b.type == BlockType::kSmooth || b.type == BlockType::kSmoothRisk) {
      const double dz = ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index)).dot(dy_);
      d += b.d2 / b.slack[0] * dz * dz;
    }
  }
  return d;
}

// Change of the barrier objective for step alpha; false if infeasible.
bool BarrierProx::trial(double alpha, double sb, double& dpsi) const {
  double dobj = 0;
  double dlog = 0;
  for (Eigen::Index j = 0; j < n_; ++j) {
    const double step = alpha * dy_[j];
    const double nl = sl_[j] + step;
    const double nu = su_[j] - step;
    if (!(nl > 0 && nu > 0)) return false;
    dlog += std::log1p(step / sl_[j]) + std::log1p(-step / su_[j]);
    dobj += step * (2 * (y_[j] - x_[j]) + step) / (2 * probe_.lambda) - (pen_.c(y_[j] + step) - pen_.c(y_[j]));
  }
  for (const auto& b : blocks_) {
    dobj += alpha * b.obj.dot(b.dlocal);
    for (Eigen::Index c = 0; c < b.slack.size(); ++c) {
      double ds = alpha * b.dslack[c];
      if (c == 0 && (b.type == BlockType::kSmooth || b.type == BlockType::kSmoothRisk)) {
        const SmoothBase sbase{spec_.base(), ds_.target(b.index) > 0 ? 1.0 : -1.0};
        const double dz = alpha * ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index)).dot(dy_);
        ds -= sbase.bregman(b.zeta, dz);
      }
      if (!(b.slack[c] + ds > 0)) return false;
      dlog += std::log1p(ds / b.slack[c]);
    }
  }
  dpsi = sb * dobj - dlog;
  return std::isfinite(dpsi);
}

void BarrierProx::apply(double alpha) {
  for (auto& b : blocks_) {
    SVec ds = alpha * b.dslack;
    if (b.type == BlockType::kSmooth || b.type == BlockType::kSmoothRisk) {
      const SmoothBase sbase{spec_.base(), ds_.target(b.index) > 0 ? 1.0 : -1.0};
      const double dz = alpha * ds_.feature_matrix().row(static_cast<Eigen::Index>(b.index)).dot(dy_);
      ds[0] -= sbase.bregman(b.zeta, dz);
    }
    b.slack += ds;
    b.local += alpha * b.dlocal;
  }
  sl_ += alpha * dy_;
  su_ -= alpha * dy_;
  y_ += alpha * dy_;
  h_ += alpha * dh_;
}

ProxResult BarrierProx::solve() {
  const double mu = 1.0 / probe_.lambda - spec_.weak_convexity_modulus();
  const double m = static_cast<double>(m_);
  double sb = 1.0;
  std::size_t iters = 0;
  while (true) {
    double dec2 = INFINITY;
    std::size_t stage_iters = 0;
    double prev = INFINITY;
    while (true) {
      if (iters >= probe_.budget) {
        throw ConvergenceError("prox: Newton budget of " + std::to_string(probe_.budget) + " exhausted", y_);
      }
      assemble_and_solve(sb);
      dec2 = decrement_sq(sb);
      ++iters;
      ++stage_iters;
      if (dec2 <= 1e-14) break;
      // Rounding floor: the decrement stopped shrinking at a tiny level.
      if (dec2 <= 1e-8 && stage_iters > 3 && dec2 >= 0.25 * prev) break;
      prev = dec2;
      const double dec = std::sqrt(dec2);
      double alpha = 1.0;
      double dpsi = 0;
      bool stalled = false;
      while (true) {
        const bool ok = trial(alpha, sb, dpsi);
        if (ok && (dec < 0.25 || dpsi <= -0.25 * alpha * dec2)) break;
        alpha *= 0.5;
        if (alpha < 1e-20) {
          // Directions lose accuracy at very large sb. Inside the quadratic
          // region the gap bound below still holds, so stop and let it judge.
          if (dec > 0.5) throw ConvergenceError("prox: line search failed", y_);
          stalled = true;
          break;
        }
      }
      if (stalled) break;
      apply(alpha);
    }
    const double dec = std::sqrt(dec2);
    const double gap = (m + (std::sqrt(m) + dec) * dec / (1.0 - std::min(dec, 0.5))) / sb;
    const double cert = 2.0 * gap / mu;
    if (cert <= probe_.tolerance) {
      return ProxResult{project(box_, y_), cert, iters};
    }
    if (dec > 1e-4) throw ConvergenceError("prox: stalled before reaching the tolerance", y_);
    sb *= 10.0;
    nu_ *= 10.0;
  }
}

}  // namespace

ProxResult prox_solve(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds, const RiskParams& rp,
                      const BoxConstraint& box, const VectorRef& x) {
  if (!(probe.lambda > 0) || !(probe.tolerance > 0) || probe.budget == 0) {
    throw ConfigError("probe: lambda, tolerance and budget must be positive");
  }
  if (box.dim() != ds.dim()) throw ArgumentError("prox: box/data dimension mismatch");
  if (probe.lambda * spec.weak_convexity_modulus() >= 1.0) {
    throw ArgumentError("prox: lambda * rho must be < 1 for a strongly convex subproblem");
  }
  BarrierProx solver(probe, spec, ds, rp, box, x);
  return solver.solve();
}

Vector prox(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds, const RiskParams& rp,
            const BoxConstraint& box, const VectorRef& x) {
  return prox_solve(probe, spec, ds, rp, box, x).x_hat;
}

StationarityReport moreau_gradient(const MoreauProbe& probe, const LossSpec& spec, const Dataset& ds,
                                   const RiskParams& rp, const BoxConstraint& box, const VectorRef& x) {
  const auto res = prox_solve(probe, spec, ds, rp, box, x);
  StationarityReport r;
  r.x_hat = res.x_hat;
  r.dist_to_xhat = (x - r.x_hat).norm();
  r.grad_norm = r.dist_to_xhat / probe.lambda;
  r.phi_at_xhat = composite_objective(spec, r.x_hat, ds, rp);
  r.envelope_value = r.phi_at_xhat + r.dist_to_xhat * r.dist_to_xhat / (2.0 * probe.lambda);
  r.certified_dist_sq = res.certified_dist_sq;
  return r;
}

}  // namespace scsdro
