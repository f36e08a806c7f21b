#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scsdro/harness.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/robusteval.hpp"
#include "scsdro/scs.hpp"
#include "scsdro/spider.hpp"
#include "scsdro/stationarity.hpp"

namespace py = pybind11;
using namespace scsdro;

namespace {

LossSpec make_spec(const std::string& loss, const std::string& penalty, double lam, double gamma) {
  return LossSpec(parse_base_loss(loss), parse_penalty(penalty), PenaltyParams{lam, gamma});
}

py::dict run_to_dict(const RunResult& r) {
  const auto n = r.trace.rows.size();
  std::vector<std::size_t> k(n), epoch(n), batch(n);
  std::vector<double> f(n), u(n), err(n), step(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = r.trace.rows[i];
    k[i] = row.k;
    f[i] = row.F_hat;
    u[i] = row.u;
    err[i] = row.track_err;
    step[i] = row.step_norm;
    epoch[i] = row.epoch;
    batch[i] = row.batch_size;
  }
  py::dict trace;
  trace["k"] = k;
  trace["F_hat"] = f;
  trace["u"] = u;
  trace["track_err"] = err;
  trace["step_norm"] = step;
  if (r.trace.spider) {
    trace["epoch"] = epoch;
    trace["batch_size"] = batch;
  }
  py::dict out;
  out["output"] = r.output;
  out["output_index"] = r.output_index;
  out["final_x"] = r.final_x;
  out["final_u"] = r.final_u;
  out["trace"] = trace;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic compositional subgradient methods for mean-semideviation risk";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def(
      "mean_semideviation",
      [](const Vector& values, std::optional<Vector> probs, double kappa) {
        const auto d = probs ? FiniteDistribution(values, *probs) : FiniteDistribution::uniform(values);
        return mean_semideviation(d, RiskParams(kappa));
      },
      py::arg("values"), py::arg("probs") = py::none(), py::arg("kappa"));

  m.def(
      "dual_value_oracle",
      [](const Vector& values, std::optional<Vector> probs, double kappa) {
        const auto d = probs ? FiniteDistribution(values, *probs) : FiniteDistribution::uniform(values);
        return dual_value_oracle(d, RiskParams(kappa));
      },
      py::arg("values"), py::arg("probs") = py::none(), py::arg("kappa"));

  m.def(
      "loss_values",
      [](const Vector& x, const RowMatrix& a, const Vector& b, const std::string& loss, const std::string& penalty,
         double lam, double gamma) { return loss_values(make_spec(loss, penalty, lam, gamma), x, Dataset(a, b)); },
      py::arg("x"), py::arg("features"), py::arg("targets"), py::arg("loss") = "mad", py::arg("penalty") = "none",
      py::arg("lam") = 0.1, py::arg("gamma") = 3.0);

  m.def(
      "objective",
      [](const Vector& x, const RowMatrix& a, const Vector& b, double kappa, const std::string& loss,
         const std::string& penalty, double lam, double gamma) {
        return composite_objective(make_spec(loss, penalty, lam, gamma), x, Dataset(a, b), RiskParams(kappa));
      },
      py::arg("x"), py::arg("features"), py::arg("targets"), py::arg("kappa"), py::arg("loss") = "mad",
      py::arg("penalty") = "none", py::arg("lam") = 0.1, py::arg("gamma") = 3.0);

  m.def(
      "synthetic",
      [](std::size_t n, std::size_t d, double noise, double frac, double mult, bool intercept,
         std::optional<std::uint64_t> wseed, std::uint64_t seed) {
        SyntheticSpec s;
        s.n = n;
        s.d = d;
        s.noise = noise;
        s.tail_fraction = frac;
        s.tail_multiplier = mult;
        s.intercept = intercept;
        s.weight_seed = wseed;
        s.validate();
        const RngStream rng(seed);
        const Dataset ds = generate_synthetic(s, rng);
        return py::make_tuple(ds.feature_matrix(), ds.targets(), true_weights(s, rng));
      },
      py::arg("n") = 200, py::arg("d") = 10, py::arg("noise") = 0.1, py::arg("frac") = 0.1, py::arg("mult") = 10.0,
      py::arg("intercept") = false, py::arg("wseed") = py::none(), py::arg("seed") = 0);

  m.def(
      "run_scs",
      [](const RowMatrix& a, const Vector& b, double kappa, double tau, std::size_t iters, std::uint64_t seed,
         const std::string& loss, const std::string& penalty, double lam, double gamma, double box,
         std::size_t trace_thin, std::optional<Vector> x0) {
        ScsConfig c;
        c.tau = tau;
        c.iters = iters;
        c.risk = RiskParams(kappa);
        c.box = BoxConstraint::symmetric(static_cast<std::size_t>(a.cols()), box);
        c.seed = seed;
        c.trace_thin = trace_thin;
        c.x0 = std::move(x0);
        const Dataset ds(a, b);
        const auto spec = make_spec(loss, penalty, lam, gamma);
        py::gil_scoped_release release;
        auto r = run_scs(c, spec, ds);
        py::gil_scoped_acquire acquire;
        return run_to_dict(r);
      },
      py::arg("features"), py::arg("targets"), py::arg("kappa"), py::arg("tau") = 0.01, py::arg("iters") = 1000,
      py::arg("seed") = 0, py::arg("loss") = "mad", py::arg("penalty") = "none", py::arg("lam") = 0.1,
      py::arg("gamma") = 3.0, py::arg("box") = 10.0, py::arg("trace_thin") = 1, py::arg("x0") = py::none());

  m.def(
      "run_spider",
      [](const RowMatrix& a, const Vector& b, double kappa, double tau, std::size_t iters, std::size_t epoch,
         std::size_t large_batch, std::size_t small_batch, std::uint64_t seed, const std::string& loss,
         const std::string& penalty, double lam, double gamma, double box, std::size_t trace_thin) {
        SpiderConfig c;
        c.tau = tau;
        c.iters = iters;
        c.epoch = epoch;
        c.large_batch = large_batch;
        c.small_batch = small_batch;
        c.risk = RiskParams(kappa);
        c.box = BoxConstraint::symmetric(static_cast<std::size_t>(a.cols()), box);
        c.seed = seed;
        c.trace_thin = trace_thin;
        const Dataset ds(a, b);
        const auto spec = make_spec(loss, penalty, lam, gamma);
        py::gil_scoped_release release;
        auto r = run_spider(c, spec, ds);
        py::gil_scoped_acquire acquire;
        return run_to_dict(r);
      },
      py::arg("features"), py::arg("targets"), py::arg("kappa"), py::arg("tau") = 0.01, py::arg("iters") = 1000,
      py::arg("epoch") = 10, py::arg("large_batch") = 64, py::arg("small_batch") = 8, py::arg("seed") = 0,
      py::arg("loss") = "mad", py::arg("penalty") = "none", py::arg("lam") = 0.1, py::arg("gamma") = 3.0,
      py::arg("box") = 10.0, py::arg("trace_thin") = 1);

  m.def(
      "auto_params",
      [](double sigma, double L, double M, double tau) {
        const auto s = auto_params(sigma, L, M, tau);
        return py::make_tuple(s.epoch, s.large_batch, s.small_batch);
      },
      py::arg("sigma"), py::arg("L"), py::arg("M"), py::arg("tau"), "Returns (T, B, b).");

  m.def(
      "moreau_gradient",
      [](const Vector& x, const RowMatrix& a, const Vector& b, double kappa, const std::string& loss,
         const std::string& penalty, double lam, double gamma, std::optional<double> lambda, double box) {
        const auto spec = make_spec(loss, penalty, lam, gamma);
        const RiskParams rp(kappa);
        MoreauProbe p = MoreauProbe::standard(spec, rp);
        if (lambda) p.lambda = *lambda;
        const auto r = moreau_gradient(p, spec, Dataset(a, b), rp,
                                       BoxConstraint::symmetric(static_cast<std::size_t>(a.cols()), box), x);
        py::dict out;
        out["x_hat"] = r.x_hat;
        out["grad_norm"] = r.grad_norm;
        out["phi_at_xhat"] = r.phi_at_xhat;
        out["envelope_value"] = r.envelope_value;
        out["certified_dist_sq"] = r.certified_dist_sq;
        out["lambda"] = p.lambda;
        return out;
      },
      py::arg("x"), py::arg("features"), py::arg("targets"), py::arg("kappa"), py::arg("loss") = "mad",
      py::arg("penalty") = "none", py::arg("lam") = 0.1, py::arg("gamma") = 3.0, py::arg("lambda_") = py::none(),
      py::arg("box") = 10.0);

  m.def(
      "semidev_attack",
      [](const Vector& x, const RowMatrix& a, const Vector& b, double kappa_adv, const std::string& loss,
         const std::string& penalty, double lam, double gamma) {
        return semidev_attack_losses(make_spec(loss, penalty, lam, gamma), x, Dataset(a, b), kappa_adv);
      },
      py::arg("x"), py::arg("features"), py::arg("targets"), py::arg("kappa_adv") = 1.0, py::arg("loss") = "mad",
      py::arg("penalty") = "none", py::arg("lam") = 0.1, py::arg("gamma") = 3.0);

  m.def(
      "pgm_attack",
      [](const Vector& x, const RowMatrix& a, const Vector& b, double eps, double tau, std::size_t iters,
         const std::string& loss) {
        PgmConfig c{eps, tau, iters};
        const Dataset adv = pgm_attack(LossSpec(parse_base_loss(loss)), x, Dataset(a, b), c);
        return adv.feature_matrix();
      },
      py::arg("x"), py::arg("features"), py::arg("targets"), py::arg("eps") = 0.1, py::arg("tau") = 0.1,
      py::arg("iters") = 10, py::arg("loss") = "mad", "Attacked feature matrix; targets are unchanged.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> all{"scsdro"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& s : all) argv.push_back(s.c_str());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line harness in-process and returns its exit code.");
}
