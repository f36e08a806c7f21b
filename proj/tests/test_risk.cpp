#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "scsdro/risk.hpp"

using namespace scsdro;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FiniteDistribution random_dist(RngStream& r, std::size_t max_n) {
  const auto n = static_cast<Eigen::Index>(1 + r.uniform_index(max_n));
  Vector v(n), p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = r.uniform(-10, 10);
    p[i] = 0.01 + r.uniform();
  }
  return FiniteDistribution(v, p / p.sum());
}

// Direct two-pass evaluation, independent of the library's loop.
double semidev_reference(const Vector& v, const Vector& p, double k) {
  long double m = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m += static_cast<long double>(p[i]) * v[i];
  long double up = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) up += static_cast<long double>(p[i]) * std::max(0.0L, v[i] - m);
  return static_cast<double>(m + k * up);
}

}  // namespace

TEST_SUITE("risk") {
  TEST_CASE("kappa range") {
    CHECK_THROWS_AS(RiskParams(-0.1), ConfigError);
    CHECK_THROWS_AS(RiskParams(1.5), ConfigError);
    CHECK_NOTHROW(RiskParams(1.0));
  }

  TEST_CASE("distribution validation") {
    CHECK_THROWS_AS(FiniteDistribution(vec({1, 2}), vec({0.5, 0.6})), ArgumentError);
    CHECK_THROWS_AS(FiniteDistribution(vec({1, 2}), vec({1.5, -0.5})), ArgumentError);
    CHECK_THROWS_AS(FiniteDistribution(vec({1}), vec({0.5, 0.5})), ArgumentError);
    CHECK_THROWS_AS(FiniteDistribution::uniform(Vector(0)), ArgumentError);
  }

  TEST_CASE("semideviation examples") {
    const auto d02 = FiniteDistribution::uniform(vec({0, 2}));
    CHECK(mean_semideviation(d02, RiskParams(0.5)) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(mean_semideviation(FiniteDistribution::uniform(vec({1, 2, 3})), RiskParams(1)) ==
          doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(mean_semideviation(FiniteDistribution::uniform(vec({4, 4, 4})), RiskParams(0.9)) == doctest::Approx(4));
    CHECK(mean_semideviation(d02, RiskParams(0)) == doctest::Approx(1));
  }

  TEST_CASE("dual oracle examples") {
    const auto d02 = FiniteDistribution::uniform(vec({0, 2}));
    CHECK(dual_value_oracle(d02, RiskParams(0.5)) == doctest::Approx(1.25));
    CHECK(dual_value_oracle(d02, RiskParams(0)) == doctest::Approx(1));
    const Vector mu = worst_case_distortion(d02, RiskParams(1));
    CHECK(mu[0] == doctest::Approx(0.5));
    CHECK(mu[1] == doctest::Approx(1.5));
    CHECK(worst_case_distortion(d02, RiskParams(0)) == Vector::Ones(2));
    CHECK_THROWS_AS(dual_value_oracle(FiniteDistribution::uniform(Vector::Zero(21)), RiskParams(0.5)), CapacityError);
  }

  TEST_CASE("primal equals dual on random distributions") {
    RngStream r(101);
    for (int t = 0; t < 300; ++t) {
      const auto d = random_dist(r, 12);
      for (double k : {0.0, 0.3, 0.7, 1.0}) {
        const RiskParams rp(k);
        const double primal = mean_semideviation(d, rp);
        CHECK(std::abs(primal - semidev_reference(d.values(), d.probs(), k)) <= 1e-12);
        CHECK(std::abs(primal - dual_value_oracle(d, rp)) <= 1e-10);
        const Vector mu = worst_case_distortion(d, rp);
        CHECK((mu.array() >= 0).all());
        CHECK(std::abs(d.probs().dot(mu) - 1) <= 1e-12);
        CHECK(std::abs(d.probs().dot(mu.cwiseProduct(d.values())) - primal) <= 1e-10);
      }
    }
  }

  TEST_CASE("coherence axioms") {
    RngStream r(202);
    for (int t = 0; t < 1000; ++t) {
      const auto d = random_dist(r, 10);
      const RiskParams rp(r.uniform());
      const double base = mean_semideviation(d, rp);
      const double c = r.uniform(-5, 5);
      const double s = r.uniform(0, 3);
      const Vector shift = d.values().array() + c;
      CHECK(std::abs(mean_semideviation(FiniteDistribution(shift, d.probs()), rp) - (base + c)) <= 1e-10);
      CHECK(std::abs(mean_semideviation(FiniteDistribution(s * d.values(), d.probs()), rp) - s * base) <= 1e-10);
      Vector up = d.values();
      for (Eigen::Index i = 0; i < up.size(); ++i) up[i] += r.uniform(0, 2);
      CHECK(mean_semideviation(FiniteDistribution(up, d.probs()), rp) >= base - 1e-10);
      CHECK(base >= d.mean() - 1e-10);
    }
  }

  TEST_CASE("composite objective") {
    RowMatrix a(3, 1);
    a << 1, 2, 3;
    const Dataset ds(a, vec({0, 0, 0}));
    const LossSpec mad(BaseLoss::kMad);
    const Vector x = vec({1});
    const Vector l = loss_values(mad, x, ds);
    CHECK(l == vec({1, 2, 3}));
    CHECK(inner_value(mad, x, ds) == doctest::Approx(2));
    CHECK(composite_objective(mad, x, ds, RiskParams(1)) == doctest::Approx(7.0 / 3.0));
    CHECK(composite_objective(mad, x, ds, RiskParams(0)) == doctest::Approx(2));
    CHECK(outer_value(mad, x, 2.0, ds, RiskParams(1)) == doctest::Approx(7.0 / 3.0));
    CHECK(outer_value(mad, x, 10.0, ds, RiskParams(1)) == doctest::Approx(10));
    const Dataset one(a.topRows(1), vec({0}));
    CHECK(composite_objective(mad, x, one, RiskParams(0.7)) == doctest::Approx(1));
    CHECK_THROWS_AS(loss_values(mad, vec({1, 2}), ds), ArgumentError);
  }

  TEST_CASE("outer value is 1-Lipschitz, nondecreasing-convex shape in u") {
    RngStream r(303);
    RowMatrix a(8, 2);
    Vector b(8);
    for (int i = 0; i < 8; ++i) {
      a(i, 0) = r.uniform(-1, 1);
      a(i, 1) = r.uniform(-1, 1);
      b[i] = r.uniform(-1, 1);
    }
    const Dataset ds(a, b);
    const LossSpec mad(BaseLoss::kMad);
    const Vector x = vec({0.5, -1});
    for (int t = 0; t < 500; ++t) {
      const RiskParams rp(r.uniform());
      const double u1 = r.uniform(-3, 3), u2 = r.uniform(-3, 3);
      const double f1 = outer_value(mad, x, u1, ds, rp), f2 = outer_value(mad, x, u2, ds, rp);
      CHECK(std::abs(f1 - f2) <= std::abs(u1 - u2) + 1e-12);
      const double um = 0.5 * (u1 + u2);
      CHECK(outer_value(mad, x, um, ds, rp) <= 0.5 * (f1 + f2) + 1e-12);
    }
  }

  TEST_CASE("composite objective is 1-Lipschitz in the loss vector") {
    RngStream r(404);
    for (int t = 0; t < 300; ++t) {
      const auto d = random_dist(r, 10);
      Vector v2 = d.values();
      for (Eigen::Index i = 0; i < v2.size(); ++i) v2[i] += r.uniform(-1, 1);
      const RiskParams rp(r.uniform());
      const double gap = std::abs(mean_semideviation(d, rp) - mean_semideviation(FiniteDistribution(v2, d.probs()), rp));
      CHECK(gap <= d.probs().dot((v2 - d.values()).cwiseAbs()) * (1 + rp.kappa) + 1e-12);
    }
  }
}
