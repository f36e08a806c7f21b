#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/stationarity.hpp"

using namespace scsdro;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset abs_data() { return Dataset(RowMatrix::Ones(1, 1), vec({0})); }

double soft(double x, double l) { return std::copysign(std::max(std::abs(x) - l, 0.0), x); }

MoreauProbe probe(double lambda) {
  MoreauProbe p;
  p.lambda = lambda;
  return p;
}

// Scalar prox by golden-section search on a strongly convex objective.
template <class F>
double golden_min(F f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_SUITE("stationarity") {
  TEST_CASE("rho constants") {
    CHECK(rho_bar(0, 1) == 2.0);
    CHECK(rho_bar(0.5, 0) == 0.0);
    CHECK(rho_bar(1, 2) == 10.0);
    CHECK(rho(1, 2) == 6.0);
    const LossSpec scad(BaseLoss::kMad, PenaltyKind::kScad, {0.1, 3});
    CHECK(MoreauProbe::standard(scad, RiskParams(0)).lambda == doctest::Approx(1.0));
    CHECK(MoreauProbe::standard(LossSpec(BaseLoss::kMad), RiskParams(0.5)).lambda == 1.0);
    CHECK(MoreauProbe::standard(scad, RiskParams(1), 2.0).lambda == doctest::Approx(0.1));
  }

  TEST_CASE("soft threshold") {
    const LossSpec mad(BaseLoss::kMad);
    const auto box = BoxConstraint::symmetric(1, 10);
    for (double lam : {0.25, 0.5, 1.0}) {
      for (double x : {-3.0, -0.5, 0.0, 0.5, 2.0, 3.0}) {
        const auto r = moreau_gradient(probe(lam), mad, abs_data(), RiskParams(0), box, vec({x}));
        // |x| == lam sits on the kink of the prox map; only the certified bound applies there
        const double tol = std::abs(std::abs(x) - lam) < 1e-12 ? 1e-6 : 1e-8;
        CHECK(std::abs(r.x_hat[0] - soft(x, lam)) <= tol);
        CHECK(std::abs(r.grad_norm - std::abs(x - soft(x, lam)) / lam) <= tol / lam);
        CHECK(r.dist_to_xhat == doctest::Approx(lam * r.grad_norm).epsilon(1e-15));
        CHECK(r.certified_dist_sq <= 1e-12);
      }
    }
    const auto r = moreau_gradient(probe(0.5), mad, abs_data(), RiskParams(0), box, vec({2}));
    CHECK(r.x_hat[0] == doctest::Approx(1.5));
    CHECK(r.grad_norm == doctest::Approx(1.0));
  }

  TEST_CASE("zero objective returns the point, clipped to the box") {
    const Dataset zero(RowMatrix::Zero(3, 2), vec({0, 0, 0}));
    const LossSpec mad(BaseLoss::kMad);
    const auto box = BoxConstraint::symmetric(2, 1);
    auto r = prox(probe(1), mad, zero, RiskParams(0.5), box, vec({0.3, -0.2}));
    CHECK((r - vec({0.3, -0.2})).norm() <= 1e-6);
    r = prox(probe(1), mad, zero, RiskParams(0), box, vec({5, 0}));
    CHECK((r - vec({1, 0})).norm() <= 1e-6);
  }

  TEST_CASE("quadratic closed form") {
    const Dataset one(RowMatrix::Ones(1, 1), vec({0.7}));
    const LossSpec ls(BaseLoss::kLeastSquares);
    const auto box = BoxConstraint::symmetric(1, 10);
    for (double lam : {0.1, 1.0, 3.0}) {
      for (double x : {-2.0, 0.0, 4.0}) {
        const double want = (x + 2 * lam * 0.7) / (1 + 2 * lam);
        CHECK(std::abs(prox(probe(lam), ls, one, RiskParams(0), box, vec({x}))[0] - want) <= 1e-7);
      }
    }
  }

  TEST_CASE("scalar risk-averse prox against golden section") {
    RngStream r(5);
    RowMatrix a(7, 1);
    Vector b(7);
    for (int i = 0; i < 7; ++i) {
      a(i, 0) = r.uniform(-1, 1);
      b[i] = r.uniform(-1, 1);
    }
    const Dataset ds(a, b);
    const auto box = BoxConstraint::symmetric(1, 10);
    for (auto base : {BaseLoss::kMad, BaseLoss::kLeastSquares, BaseLoss::kLogistic}) {
      for (auto pen : {PenaltyKind::kNone, PenaltyKind::kScad, PenaltyKind::kMcp}) {
        const LossSpec spec(base, pen, {0.2, 3});
        for (double k : {0.0, 0.5, 1.0}) {
          const RiskParams rp(k);
          const auto pr = MoreauProbe::standard(spec, rp);
          for (double x : {-1.5, 0.1, 2.0}) {
            auto env = [&](double y) {
              return composite_objective(spec, vec({y}), ds, rp) + (y - x) * (y - x) / (2 * pr.lambda);
            };
            const double want = golden_min(env, -10, 10);
            const double got = prox(pr, spec, ds, rp, box, vec({x}))[0];
            CHECK(std::abs(got - want) <= 1e-6);
          }
        }
      }
    }
  }

  TEST_CASE("prox beats perturbations on random instances") {
    const Dataset ds = oracle::linear_data(60, 4, 0.5, 3);
    const auto box = BoxConstraint::symmetric(4, 10);
    RngStream r(12);
    for (auto base : {BaseLoss::kMad, BaseLoss::kLeastSquares, BaseLoss::kLogistic}) {
      for (double k : {0.0, 0.5}) {
        const LossSpec spec(base, PenaltyKind::kScad, {0.1, 3});
        const RiskParams rp(k);
        const auto pr = MoreauProbe::standard(spec, rp);
        const Vector x = vec({0.7, -0.3, 0.2, 1.1});
        const auto rep = moreau_gradient(pr, spec, ds, rp, box, x);
        CHECK(rep.envelope_value <= composite_objective(spec, x, ds, rp) + 1e-10);
        CHECK(rep.phi_at_xhat <= composite_objective(spec, x, ds, rp) + 1e-10);
        for (int t = 0; t < 200; ++t) {
          Vector y = rep.x_hat;
          for (int j = 0; j < 4; ++j) y[j] += r.uniform(-1e-3, 1e-3);
          const double ey = composite_objective(spec, y, ds, rp) + (y - x).squaredNorm() / (2 * pr.lambda);
          CHECK(ey >= rep.envelope_value - 1e-10);
        }
      }
    }
  }

  TEST_CASE("invalid probes") {
    const LossSpec scad(BaseLoss::kMad, PenaltyKind::kScad, {0.1, 3});
    const auto box = BoxConstraint::symmetric(1, 10);
    CHECK_THROWS_AS(prox(probe(2.5), scad, abs_data(), RiskParams(0), box, vec({1})), ArgumentError);
    CHECK_THROWS_AS(prox(probe(-1), scad, abs_data(), RiskParams(0), box, vec({1})), ConfigError);
    MoreauProbe tight = probe(1);
    tight.budget = 3;
    try {
      prox(tight, LossSpec(BaseLoss::kMad), abs_data(), RiskParams(0), box, vec({2}));
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.best_iterate().size() == 1);
    }
  }
}
