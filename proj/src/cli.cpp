#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "scsdro/harness.hpp"
#include "scsdro/risk.hpp"
#include "scsdro/robusteval.hpp"

namespace scsdro {

namespace {

// Setting keys accepted both in config files and as --flags.
const char* const kValueKeys[] = {"algo", "loss", "penalty", "lambda", "gamma", "kappa", "tau", "tau-auto",
                                  "iters", "seed", "data", "synthetic", "box", "spider", "out",
                                  "trace-thin", "probe-every", "spider-sigma", "spider-lipschitz",
                                  "spider-m", "probe-delta"};

struct ExperimentFlags {
  std::string config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> opts;
  bool spider_auto = false;
  CLI::Option* spider_auto_opt = nullptr;
};

void add_experiment_options(CLI::App* app, ExperimentFlags& f) {
  app->add_option("--config", f.config, "key = value settings file; flags override it");
  for (const char* key : kValueKeys) {
    f.opts[key] = app->add_option(std::string("--") + key, f.values[key]);
  }
  f.spider_auto_opt = app->add_flag("--spider-auto", f.spider_auto, "SPIDER T, B, b from pilot constants");
}

ExperimentConfig build_config(const ExperimentFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    for (const auto& [k, v] : read_settings_file(f.config)) apply_setting(cfg, k, v);
  }
  auto given = [&](const char* k) { return f.opts.at(k)->count() > 0; };
  if (given("tau") && given("tau-auto")) throw ConfigError("give either --tau or --tau-auto, not both");
  if (given("data") && given("synthetic")) throw ConfigError("give either --data or --synthetic, not both");
  if (given("spider") && f.spider_auto_opt->count() > 0) {
    throw ConfigError("give either --spider or --spider-auto, not both");
  }
  for (const char* key : kValueKeys) {
    if (given(key)) apply_setting(cfg, key, f.values.at(key));
  }
  if (f.spider_auto_opt->count() > 0) apply_setting(cfg, "spider-auto", "1");
  cfg.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LossRows {
  std::vector<double> clean, attacked;
};

LossRows read_loss_table(const std::string& path) {
  std::istringstream in(read_file(path));
  LossRows r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("i,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string a, b, c, extra;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ',') ||
        std::getline(ls, extra, ',')) {
      throw DataError(path + ": row " + std::to_string(lineno) + " must have 3 fields");
    }
    try {
      std::size_t pos = 0;
      const double vb = std::stod(b, &pos);
      if (pos != b.size()) throw std::invalid_argument("b");
      const double vc = std::stod(c, &pos);
      if (pos != c.size()) throw std::invalid_argument("c");
      r.clean.push_back(vb);
      r.attacked.push_back(vc);
    } catch (const std::logic_error&) {
      throw DataError(path + ": row " + std::to_string(lineno) + " is not numeric");
    }
  }
  return r;
}

void write_histogram_rows(std::ostream& out, const std::string& source, const std::string& series,
                          const Histogram& h) {
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << source << ',' << series << ',' << format_real(h.edges[b]) << ',' << format_real(h.edges[b + 1]) << ','
        << h.counts[b] << '\n';
  }
}

int cmd_train(const ExperimentFlags& f) {
  const ExperimentConfig cfg = build_config(f);
  const auto s = train(cfg);
  std::cout << "objective_at_output = " << format_real(s.objective_at_output) << '\n';
  if (s.grad_norm_at_output) std::cout << "grad_norm_at_output = " << format_real(*s.grad_norm_at_output) << '\n';
  return 0;
}

int cmd_probe(const ExperimentFlags& f, const std::string& weights, const std::string& checkpoints) {
  const ExperimentConfig cfg = build_config(f);
  std::vector<std::pair<std::size_t, Vector>> cps;
  if (!checkpoints.empty()) {
    std::istringstream in(read_file(checkpoints));
    cps = read_checkpoints(in);
  } else {
    cps.emplace_back(0, read_weights_file(weights));
  }
  const Dataset ds = load_dataset(cfg);
  write_probe_csv(std::cout, probe_checkpoints(cfg, ds, cps));
  return 0;
}

int cmd_attack(const ExperimentFlags& f, const std::string& weights, const std::string& kind, double kappa_adv,
               const PgmConfig& pgm, std::size_t bins) {
  const ExperimentConfig cfg = build_config(f);
  const Dataset ds = load_dataset(cfg);
  const Vector x = read_weights_file(weights);
  if (static_cast<std::size_t>(x.size()) != ds.dim()) throw DataError("attack: weight dimension does not match data");
  const LossSpec spec = cfg.loss_spec();
  const Vector clean = loss_values(spec, x, ds);
  Vector attacked;
  if (kind == "semidev") {
    attacked = semidev_attack_losses(spec, x, ds, kappa_adv);
  } else if (kind == "pgm") {
    attacked = loss_values(spec, x, pgm_attack(spec, x, ds, pgm));
  } else {
    throw ConfigError("attack: --kind must be semidev or pgm");
  }
  std::ostringstream t;
  t << "i,clean,attacked\n";
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    t << i << ',' << format_real(clean[i]) << ',' << format_real(attacked[i]) << '\n';
  }
  const std::filesystem::path dir(cfg.out);
  write_file_atomic((dir / "attack_losses.csv").string(), t.str());
  std::ostringstream h;
  h << "source,series,bin_lo,bin_hi,count\n";
  const std::vector<double> vc(clean.data(), clean.data() + clean.size());
  const std::vector<double> va(attacked.data(), attacked.data() + attacked.size());
  write_histogram_rows(h, "attack", "clean", loss_histogram(vc, bins));
  write_histogram_rows(h, "attack", "attacked", loss_histogram(va, bins));
  write_file_atomic((dir / "attack_hist.csv").string(), h.str());
  std::cout << "mean_clean = " << format_real(clean.mean()) << '\n'
            << "mean_attacked = " << format_real(attacked.mean()) << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& traces, const std::vector<std::string>& summaries,
               const std::vector<std::string>& losses, std::size_t thin, std::size_t bins, const std::string& out) {
  std::ostringstream obj, trk, gn, hist;
  obj << "trace,k,F_hat\n";
  trk << "trace,k,track_err\n";
  gn << "N,grad_norm\n";
  hist << "source,series,bin_lo,bin_hi,count\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    std::istringstream in(read_file(traces[t]));
    RunTrace tr;
    try {
      tr = RunTrace::read_csv(in);
    } catch (const DataError& e) {
      throw DataError(traces[t] + ": " + e.what());
    }
    for (const auto& r : thin_rows(tr.rows, thin)) {
      obj << t << ',' << r.k << ',' << format_real(r.F_hat) << '\n';
      trk << t << ',' << r.k << ',' << format_real(r.track_err) << '\n';
    }
  }
  for (const auto& path : summaries) {
    std::string n, g;
    for (const auto& [k, v] : read_settings_file(path)) {
      if (k == "iters") n = v;
      if (k == "grad_norm_at_output") g = v;
    }
    if (n.empty() || g.empty()) throw DataError(path + ": summary lacks iters or grad_norm_at_output");
    gn << n << ',' << g << '\n';
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const LossRows r = read_loss_table(losses[i]);
    write_histogram_rows(hist, std::to_string(i), "clean", loss_histogram(r.clean, bins));
    write_histogram_rows(hist, std::to_string(i), "attacked", loss_histogram(r.attacked, bins));
  }
  const std::filesystem::path dir(out);
  write_file_atomic((dir / "objective.csv").string(), obj.str());
  write_file_atomic((dir / "tracking.csv").string(), trk.str());
  write_file_atomic((dir / "gradnorm.csv").string(), gn.str());
  write_file_atomic((dir / "histogram.csv").string(), hist.str());
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(int code, const std::string& what) {
  std::cerr << "scsdro: " << one_line(what) << '\n';
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Stochastic compositional subgradient training for mean-semideviation risk"};
  app.require_subcommand(1);

  ExperimentFlags train_f, probe_f, attack_f;
  auto* train_cmd = app.add_subcommand("train", "run a training job and write weights, trace and summary");
  add_experiment_options(train_cmd, train_f);

  auto* probe_cmd = app.add_subcommand("probe-stationarity", "Moreau-envelope gradient at stored iterates");
  add_experiment_options(probe_cmd, probe_f);
  std::string probe_weights, probe_checkpoints;
  auto* pw = probe_cmd->add_option("--weights", probe_weights, "weights file (one value per line)");
  auto* pc = probe_cmd->add_option("--checkpoints", probe_checkpoints, "checkpoints.csv from train");
  pw->excludes(pc);

  auto* attack_cmd = app.add_subcommand("attack", "evaluate a weights file under test-time attacks");
  add_experiment_options(attack_cmd, attack_f);
  std::string attack_weights, kind = "semidev";
  double kappa_adv = 1.0;
  PgmConfig pgm;
  std::size_t bins = 20;
  attack_cmd->add_option("--weights", attack_weights)->required();
  attack_cmd->add_option("--kind", kind, "semidev or pgm");
  attack_cmd->add_option("--kappa-adv", kappa_adv);
  attack_cmd->add_option("--eps", pgm.eps);
  attack_cmd->add_option("--pgm-tau", pgm.tau);
  attack_cmd->add_option("--pgm-iters", pgm.iters);
  attack_cmd->add_option("--bins", bins);

  auto* oracle_cmd = app.add_subcommand("check-oracle", "primal-dual check of the risk measure");
  std::size_t trials = 500, max_support = 12;
  std::uint64_t oracle_seed = 0;
  oracle_cmd->add_option("--trials", trials);
  oracle_cmd->add_option("--max-support", max_support);
  oracle_cmd->add_option("--seed", oracle_seed);

  auto* report_cmd = app.add_subcommand("report", "plot-ready tables from traces, summaries and loss files");
  std::vector<std::string> r_traces, r_summaries, r_losses;
  std::size_t r_thin = 1, r_bins = 20;
  std::string r_out = ".";
  report_cmd->add_option("--trace", r_traces);
  report_cmd->add_option("--summary", r_summaries);
  report_cmd->add_option("--losses", r_losses);
  report_cmd->add_option("--thin", r_thin);
  report_cmd->add_option("--bins", r_bins);
  report_cmd->add_option("--out", r_out);

  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic data set as CSV");
  std::string g_spec, g_out;
  std::uint64_t g_seed = 0;
  gen_cmd->add_option("--synthetic", g_spec)->required();
  gen_cmd->add_option("--seed", g_seed);
  gen_cmd->add_option("--out", g_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(1, e.what());
  }

  try {
    if (*train_cmd) return cmd_train(train_f);
    if (*probe_cmd) {
      if (probe_weights.empty() && probe_checkpoints.empty()) {
        throw ConfigError("probe-stationarity needs --weights or --checkpoints");
      }
      return cmd_probe(probe_f, probe_weights, probe_checkpoints);
    }
    if (*attack_cmd) {
      pgm.validate();
      if (bins == 0) throw ConfigError("--bins must be positive");
      return cmd_attack(attack_f, attack_weights, kind, kappa_adv, pgm, bins);
    }
    if (*oracle_cmd) {
      const double gap = oracle_max_gap(trials, max_support, oracle_seed);
      std::cout << "max_gap = " << format_real(gap) << '\n';
      return gap <= 1e-10 ? 0 : fail(3, "primal-dual gap " + format_real(gap) + " exceeds 1e-10");
    }
    if (*report_cmd) {
      if (r_thin == 0 || r_bins == 0) throw ConfigError("--thin and --bins must be positive");
      return cmd_report(r_traces, r_summaries, r_losses, r_thin, r_bins, r_out);
    }
    if (*gen_cmd) {
      const Dataset ds = generate_synthetic(SyntheticSpec::parse(g_spec), RngStream(g_seed));
      std::ostringstream out;
      write_csv(out, ds);
      write_file_atomic(g_out, out.str());
      return 0;
    }
  } catch (const ConfigError& e) {
    return fail(1, e.what());
  } catch (const ArgumentError& e) {
    return fail(1, e.what());
  } catch (const CapacityError& e) {
    return fail(1, e.what());
  } catch (const DataError& e) {
    return fail(2, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(2, e.what());
  } catch (const NumericError& e) {
    return fail(3, e.what());
  } catch (const ConvergenceError& e) {
    return fail(3, e.what());
  } catch (const std::exception& e) {
    return fail(3, e.what());
  }
  return fail(1, "no subcommand");
}

}  // namespace scsdro
