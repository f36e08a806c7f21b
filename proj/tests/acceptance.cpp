// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: scsdro_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "scsdro/harness.hpp"
#include "scsdro/models.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/robusteval.hpp"
#include "scsdro/scs.hpp"
#include "scsdro/spider.hpp"
#include "scsdro/stationarity.hpp"

using namespace scsdro;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FiniteDistribution random_distribution(RngStream& r, std::size_t max_support) {
  const std::size_t n = 1 + r.uniform_index(max_support);
  Vector v(static_cast<Eigen::Index>(n)), p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = r.uniform(-10, 10);
    p[i] = 0.05 + r.uniform();
  }
  return FiniteDistribution(v, p / p.sum());
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// 1 ------------------------------------------------------------------------
Outcome primal_dual() {
  RngStream r(101);
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    const auto d = random_distribution(r, 12);
    for (double k : {0.0, 0.3, 0.7, 1.0}) {
      const RiskParams rp(k);
      worst = std::max(worst, std::abs(mean_semideviation(d, rp) - dual_value_oracle(d, rp)));
    }
  }
  return {worst <= 1e-10, "max gap " + fmt("%.3g", worst)};
}

// 2 ------------------------------------------------------------------------
Outcome coherence() {
  RngStream r(202);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto d = random_distribution(r, 12);
    const RiskParams rp(r.uniform());
    const double base = mean_semideviation(d, rp);
    const double c = r.uniform(-5, 5), s = r.uniform(0.01, 5);
    const Vector shifted = d.values().array() + c;
    Vector bigger = d.values();
    for (Eigen::Index i = 0; i < bigger.size(); ++i) bigger[i] += r.uniform(0, 2);
    const double tol = 1e-10;
    const bool ok =
        std::abs(mean_semideviation(FiniteDistribution(shifted, d.probs()), rp) - (base + c)) <= tol &&
        std::abs(mean_semideviation(FiniteDistribution(s * d.values(), d.probs()), rp) - s * base) <= tol * s &&
        mean_semideviation(FiniteDistribution(bigger, d.probs()), rp) >= base - tol && base >= d.mean() - tol;
    if (!ok) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " violations / 1000"};
}

// 3 ------------------------------------------------------------------------
Outcome reduction() {
  SyntheticSpec s;
  s.n = 200;
  s.d = 10;
  const Dataset ds = generate_synthetic(s, RngStream(303));
  const LossSpec spec(BaseLoss::kMad, PenaltyKind::kLasso, {0.05, 3});
  const auto box = BoxConstraint::symmetric(10, 10);
  const std::size_t n = 1000;
  const double tau = 0.02;
  const std::uint64_t seed = 33;
  const auto ref = oracle::projected_subgradient(spec, ds, box, tau, n, seed);

  auto same = [&](const std::vector<Vector>& path) {
    if (path.size() != ref.size()) return false;
    for (std::size_t k = 0; k < ref.size(); ++k)
      if (!(path[k].array() == ref[k].array()).all()) return false;
    return true;
  };
  std::vector<Vector> a, b;
  ScsConfig sc;
  sc.tau = tau;
  sc.iters = n;
  sc.box = box;
  sc.seed = seed;
  sc.observer = [&](std::size_t, const Vector& x, double) { a.push_back(x); };
  run_scs(sc, spec, ds);
  SpiderConfig sp;
  sp.tau = tau;
  sp.iters = n;
  sp.box = box;
  sp.seed = seed;
  sp.observer = [&](std::size_t, const Vector& x, double) { b.push_back(x); };
  run_spider(sp, spec, ds);
  const bool sa = same(a), sb = same(b);
  return {sa && sb, std::string("scs ") + (sa ? "identical" : "differs") + ", spider " + (sb ? "identical" : "differs")};
}

// 4 ------------------------------------------------------------------------
Outcome soft_threshold() {
  const Dataset one(RowMatrix::Ones(1, 1), vec({0}));
  const LossSpec mad(BaseLoss::kMad);
  const auto box = BoxConstraint::symmetric(1, 10);
  double worst = 0;
  for (double lam : {0.25, 1.0}) {
    MoreauProbe p;
    p.lambda = lam;
    for (double x : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
      const double want = std::copysign(std::max(std::abs(x) - lam, 0.0), x);
      const auto r = moreau_gradient(p, mad, one, RiskParams(0), box, vec({x}));
      worst = std::max(worst, std::abs(r.x_hat[0] - want));
      worst = std::max(worst, std::abs(r.grad_norm - std::abs(x - want) / lam));
    }
  }
  return {worst <= 1e-8, "max error " + fmt("%.3g", worst)};
}

// 5 ------------------------------------------------------------------------
constexpr std::size_t kCheckpoints = 10;

double averaged_sq_gradient(const Dataset& ds, const LossSpec& spec, const RiskParams& rp, std::size_t n,
                            std::size_t seeds) {
  const auto box = BoxConstraint::symmetric(ds.dim(), 10);
  const MoreauProbe probe = MoreauProbe::standard(spec, rp);
  std::vector<std::size_t> ks;
  for (std::size_t j = 0; j < kCheckpoints; ++j) ks.push_back(static_cast<std::size_t>((j + 0.5) * n / kCheckpoints));
  double total = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    ScsConfig c;
    c.tau = std::pow(static_cast<double>(n), -2.0 / 3.0);
    c.iters = n;
    c.risk = rp;
    c.box = box;
    c.seed = 1000 + s;
    c.trace_thin = n;
    std::vector<Vector> xs;
    c.observer = [&](std::size_t k, const Vector& x, double) {
      if (std::binary_search(ks.begin(), ks.end(), k)) xs.push_back(x);
    };
    run_scs(c, spec, ds);
    for (const auto& x : xs) total += std::pow(moreau_gradient(probe, spec, ds, rp, box, x).grad_norm, 2);
  }
  return total / static_cast<double>(seeds * kCheckpoints);
}

Outcome rate_trend() {
  SyntheticSpec s;
  s.n = 200;
  s.d = 10;
  const Dataset ds = generate_synthetic(s, RngStream(505));
  const LossSpec spec(BaseLoss::kMad, PenaltyKind::kScad, {0.1, 3});
  const RiskParams rp(0.5);
  const double g1 = averaged_sq_gradient(ds, spec, rp, 1000, 20);
  const double g8 = averaged_sq_gradient(ds, spec, rp, 8000, 20);
  const double ratio = g8 / g1;
  return {ratio >= 0.25 && ratio <= 1 / 1.2,
          "ratio " + fmt("%.4f", ratio) + " (N=1000: " + fmt("%.4g", g1) + ", N=8000: " + fmt("%.4g", g8) + ")"};
}

// 6 ------------------------------------------------------------------------
double tracking_plateau(const Dataset& ds, const LossSpec& spec, double tau, std::size_t n, std::size_t seeds) {
  std::vector<double> means;
  for (std::size_t s = 0; s < seeds; ++s) {
    ScsConfig c;
    c.tau = tau;
    c.iters = n;
    c.risk = RiskParams(0.5);
    c.box = BoxConstraint::symmetric(ds.dim(), 10);
    c.seed = 600 + s;
    const auto r = run_scs(c, spec, ds);
    double acc = 0;
    std::size_t cnt = 0;
    for (const auto& row : r.trace.rows) {
      if (row.k >= n / 2) {
        acc += row.track_err;
        ++cnt;
      }
    }
    means.push_back(acc / static_cast<double>(cnt));
  }
  return mean_of(means);
}

Outcome tracking_trend() {
  SyntheticSpec s;
  s.n = 200;
  s.d = 10;
  const Dataset ds = generate_synthetic(s, RngStream(606));
  const LossSpec spec(BaseLoss::kLogistic);
  const double coarse = tracking_plateau(ds, spec, 0.02, 5000, 10);
  const double fine = tracking_plateau(ds, spec, 0.01, 10000, 10);
  const double ratio = coarse / fine;
  return {ratio >= 1.2 && ratio <= 2.0, "ratio " + fmt("%.4f", ratio) + " (tau=0.02: " + fmt("%.4g", coarse) +
                                            ", tau=0.01: " + fmt("%.4g", fine) + ")"};
}

// 7 ------------------------------------------------------------------------
Outcome spider_bound() {
  SyntheticSpec s;
  s.n = 200;
  s.d = 10;
  const Dataset ds = generate_synthetic(s, RngStream(707));
  const LossSpec spec(BaseLoss::kMad, PenaltyKind::kScad, {0.1, 3});
  const RiskParams rp(0.5);
  const auto box = BoxConstraint::symmetric(10, 10);
  const double tau = 0.005;  // small enough that epochs contain refresh steps
  RngStream pilot = RngStream(7).substream(Substream::kPilot);
  const auto k = estimate_constants(spec, ds, box, rp, initial_point(box, std::nullopt), pilot, 64);
  auto sched = auto_params(k.sigma, k.lipschitz, k.M, tau);
  sched.small_batch = std::min(sched.small_batch, sched.large_batch);
  const double bound = spider_mse_bound(k, sched, tau);
  double sq = 0, ab = 0;
  std::size_t cnt = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    SpiderConfig c;
    c.tau = tau;
    c.iters = 3 * sched.epoch;
    c.epoch = sched.epoch;
    c.large_batch = sched.large_batch;
    c.small_batch = sched.small_batch;
    c.risk = rp;
    c.box = box;
    c.seed = 7000 + rep;
    const auto r = run_spider(c, spec, ds);
    for (const auto& row : r.trace.rows) {
      sq += row.track_err * row.track_err;
      ab += row.track_err;
      ++cnt;
    }
  }
  const double mse = sq / static_cast<double>(cnt), mabs = ab / static_cast<double>(cnt);
  return {mse <= 2 * bound && mabs <= 2 * tau,
          "mse " + fmt("%.4g", mse) + " vs 2*bound " + fmt("%.4g", 2 * bound) + "; mean|err| " + fmt("%.4g", mabs) +
              " vs 2*tau " + fmt("%.4g", 2 * tau) + " (T=" + std::to_string(sched.epoch) +
              " B=" + std::to_string(sched.large_batch) + " b=" + std::to_string(sched.small_batch) + ")"};
}

// 8 ------------------------------------------------------------------------
Outcome spider_unbiased() {
  SyntheticSpec s;
  s.n = 200;
  s.d = 10;
  const Dataset ds = generate_synthetic(s, RngStream(808));
  const LossSpec spec(BaseLoss::kMad, PenaltyKind::kScad, {0.1, 3});
  const std::size_t T = 20;
  const std::vector<std::size_t> ks{T / 2, T - 1};
  std::vector<std::vector<double>> err(ks.size());
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    SpiderConfig c;
    c.tau = 0.05;
    c.iters = T;
    c.epoch = T;
    c.large_batch = 64;
    c.small_batch = 8;
    c.risk = RiskParams(0.5);
    c.box = BoxConstraint::symmetric(10, 10);
    c.seed = 8000 + rep;
    c.observer = [&](std::size_t k, const Vector& x, double u) {
      for (std::size_t i = 0; i < ks.size(); ++i)
        if (k == ks[i]) err[i].push_back(u - inner_value(spec, x, ds));
    };
    run_spider(c, spec, ds);
  }
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double m = mean_of(err[i]), se = std_error(err[i]);
    pass = pass && std::abs(m) <= 3 * se;
    detail += "k=" + std::to_string(ks[i]) + ": mean " + fmt("%.3g", m) + ", 3se " + fmt("%.3g", 3 * se) + "; ";
  }
  return {pass, detail};
}

// 9 ------------------------------------------------------------------------
Outcome penalty_suite() {
  const PenaltyParams pp{0.1, 3};
  auto scalar = [&](PenaltyKind k, double t) { return penalty_value(k, pp, vec({t})); };
  double cont = 0;
  for (PenaltyKind k : {PenaltyKind::kScad, PenaltyKind::kMcp}) {
    for (double bp : {pp.lambda, pp.gamma * pp.lambda}) {
      for (double sgn : {-1.0, 1.0}) {
        const double at = sgn * bp;
        const double left = scalar(k, std::nextafter(at, -INFINITY)), right = scalar(k, std::nextafter(at, INFINITY));
        cont = std::max({cont, std::abs(left - scalar(k, at)), std::abs(right - scalar(k, at))});
      }
    }
  }
  RngStream r(909);
  int wc_bad = 0;
  for (PenaltyKind k : {PenaltyKind::kScad, PenaltyKind::kMcp}) {
    const double delta = k == PenaltyKind::kScad ? 1 / (pp.gamma - 1) : 1 / pp.gamma;
    for (int t = 0; t < 1000; ++t) {
      Vector x(3), y(3);
      for (int j = 0; j < 3; ++j) {
        x[j] = r.uniform(-0.6, 0.6);
        y[j] = r.uniform(-0.6, 0.6);
      }
      const double lhs = penalty_value(k, pp, y);
      const double rhs = penalty_value(k, pp, x) + penalty_subgradient(k, pp, x).dot(y - x) -
                         0.5 * delta * (y - x).squaredNorm();
      if (lhs < rhs - 1e-12) ++wc_bad;
    }
  }
  double fd = 0;
  for (BaseLoss b : {BaseLoss::kLeastSquares, BaseLoss::kLogistic}) {
    const LossSpec spec(b);
    for (int t = 0; t < 200; ++t) {
      Vector x(4), a(4);
      for (int j = 0; j < 4; ++j) {
        x[j] = r.uniform(-2, 2);
        a[j] = r.uniform(-1, 1);
      }
      const DataPoint d{a, r.uniform() < 0.5 ? -1.0 : 1.0};
      const Vector g = spec.subgradient(x, d);
      Vector num(4);
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        num[j] = (spec.value(xp, d) - spec.value(xm, d)) / (2 * h);
      }
      fd = std::max(fd, (num - g).norm() / std::max(g.norm(), 1e-3));
    }
  }
  return {cont <= 1e-12 && wc_bad == 0 && fd <= 1e-5, "continuity " + fmt("%.3g", cont) + ", weak-convexity failures " +
                                                          std::to_string(wc_bad) + ", fd rel err " + fmt("%.3g", fd)};
}

// 10 -----------------------------------------------------------------------
Outcome robustness() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SyntheticSpec sp;
    // A wide inlier band keeps the gap between the two optima above the
    // constant-step iterate noise.
    sp.n = 1000;
    sp.d = 10;
    sp.noise = 0.5;
    sp.tail_fraction = 0.2;
    sp.tail_multiplier = 10;
    sp.intercept = true;
    sp.weight_seed = 1100 + s;
    const Dataset train_set = generate_synthetic(sp, RngStream(2 * s + 1));
    sp.n = 2000;
    const Dataset test_set = generate_synthetic(sp, RngStream(2 * s + 2));
    const LossSpec spec(BaseLoss::kMad);
    double attacked[2];
    int i = 0;
    for (double kappa : {0.0, 0.5}) {
      ScsConfig c;
      c.tau = 0.005;
      c.iters = 10000;
      c.risk = RiskParams(kappa);
      c.box = BoxConstraint::symmetric(10, 10);
      c.seed = 1000 + s;
      c.trace_thin = c.iters;
      const auto r = run_scs(c, spec, train_set);
      attacked[i++] = semidev_attack_losses(spec, r.output, test_set, 1.0).mean();
    }
    if (attacked[1] < attacked[0]) ++wins;
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds favour kappa=0.5"};
}

// 11 -----------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / ("scsdro_accept_" + std::to_string(::getpid()));
  std::vector<std::filesystem::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    ExperimentConfig cfg;
    cfg.algo = Algorithm::kSpider;
    cfg.penalty = PenaltyKind::kScad;
    cfg.kappa = 0.5;
    cfg.iters = 2000;
    cfg.tau = 0.02;
    cfg.seed = 11;
    cfg.synthetic = SyntheticSpec::parse("n=300,d=8,intercept=1");
    cfg.probe_every = 500;
    cfg.out = d.string();
    train(cfg);
  }
  bool same = true;
  for (const char* f : {"weights.txt", "trace.csv", "summary.txt", "probe.csv"})
    same = same && slurp(dirs[0] / f) == slurp(dirs[1] / f) && !slurp(dirs[0] / f).empty();
  std::filesystem::remove_all(root);
  return {same, same ? "weights, trace, summary and probe files identical" : "outputs differ"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "primal-dual risk equality", 30, primal_dual},
      {2, "coherence axioms", 0, coherence},
      {3, "kappa=0 reduction", 0, reduction},
      {4, "Moreau probe exactness", 0, soft_threshold},
      {5, "rate trend", 300, rate_trend},
      {6, "tracking trend", 0, tracking_trend},
      {7, "SPIDER error bound", 0, spider_bound},
      {8, "SPIDER unbiasedness", 0, spider_unbiased},
      {9, "penalty suite", 0, penalty_suite},
      {10, "robustness ordering", 120, robustness},
      {11, "determinism", 0, determinism},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
