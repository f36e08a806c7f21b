#include "scsdro/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scsdro/risk.hpp"
#include "scsdro/scs.hpp"
#include "scsdro/stationarity.hpp"

namespace scsdro {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n == 0 || d == 0) throw ConfigError("synthetic: n and d must be positive");
  if (!(noise >= 0)) throw ConfigError("synthetic: noise must be non-negative");
  if (!(tail_fraction >= 0 && tail_fraction < 1)) throw ConfigError("synthetic: frac must lie in [0, 1)");
  if (!(tail_multiplier > 0)) throw ConfigError("synthetic: mult must be positive");
  if (weights && static_cast<std::size_t>(weights->size()) != d) {
    throw ConfigError("synthetic: weights must have d entries");
  }
}

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  SyntheticSpec s;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("synthetic: expected key=value, got '" + part + "'");
    const std::string k = trim(part.substr(0, eq));
    const std::string v = part.substr(eq + 1);
    if (k == "n") {
      s.n = to_u64(k, v);
    } else if (k == "d") {
      s.d = to_u64(k, v);
    } else if (k == "noise") {
      s.noise = to_double(k, v);
    } else if (k == "frac") {
      s.tail_fraction = to_double(k, v);
    } else if (k == "mult") {
      s.tail_multiplier = to_double(k, v);
    } else if (k == "intercept") {
      s.intercept = to_bool(k, v);
    } else if (k == "wseed") {
      s.weight_seed = to_u64(k, v);
    } else {
      throw ConfigError("synthetic: unknown key '" + k + "'");
    }
  }
  s.validate();
  return s;
}

Vector true_weights(const SyntheticSpec& spec, const RngStream& rng) {
  if (spec.weights) return *spec.weights;
  RngStream w = spec.weight_seed ? RngStream(*spec.weight_seed).substream(Substream::kWeights)
                                 : rng.substream(Substream::kWeights);
  Vector out(static_cast<Eigen::Index>(spec.d));
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = w.uniform(-1.0, 1.0);
  return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec, const RngStream& rng) {
  spec.validate();
  const Vector w = true_weights(spec, rng);
  RngStream data = rng.substream(Substream::kData);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  RowMatrix A(n, d);
  Vector b(n);
  // The tail set is a fixed count of distinct rows, chosen by a partial shuffle.
  const auto tail = static_cast<std::size_t>(std::floor(spec.tail_fraction * static_cast<double>(spec.n)));
  std::vector<std::size_t> order(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) order[i] = i;
  for (std::size_t i = 0; i < tail; ++i) std::swap(order[i], order[i + data.uniform_index(spec.n - i)]);
  std::vector<char> heavy(spec.n, 0);
  for (std::size_t i = 0; i < tail; ++i) heavy[order[i]] = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = data.uniform(-1.0, 1.0);
    if (spec.intercept) A(i, d - 1) = 1.0;
    const double z = data.normal();
    const double noise = heavy[static_cast<std::size_t>(i)] ? spec.tail_multiplier * spec.noise * std::abs(z)
                                                            : spec.noise * z;
    b[i] = A.row(i).dot(w) + noise;
  }
  return Dataset(std::move(A), std::move(b));
}

void ExperimentConfig::validate() const {
  if (!(kappa >= 0 && kappa <= 1)) throw ConfigError("kappa must lie in [0, 1]");
  if (!tau_auto && !(tau > 0)) throw ConfigError("tau must be positive");
  if (tau_auto && !(*tau_auto > 0)) throw ConfigError("tau-auto constant must be positive");
  if (iters == 0) throw ConfigError("iters must be positive");
  if (!(box > 0)) throw ConfigError("box half-width must be positive");
  if (trace_thin == 0) throw ConfigError("trace-thin must be positive");
  if (algo == Algorithm::kScs && (spider || spider_auto)) {
    throw ConfigError("spider settings require algo = scs-spider");
  }
  if (spider && spider_auto) throw ConfigError("give either spider or spider-auto, not both");
  if ((spider_sigma || spider_lipschitz || spider_m) && !spider_auto) {
    throw ConfigError("spider-sigma, spider-lipschitz and spider-m require spider-auto");
  }
  for (const auto& c : {spider_sigma, spider_lipschitz, spider_m}) {
    if (c && !(*c > 0)) throw ConfigError("spider constants must be positive");
  }
  if (probe_delta && !(*probe_delta >= 0)) throw ConfigError("probe-delta must be non-negative");
  if (spider && (spider->epoch == 0 || spider->large_batch == 0 || spider->small_batch == 0)) {
    throw ConfigError("spider T, B, b must be positive");
  }
  if (!data.empty() && synthetic) throw ConfigError("give either data or synthetic, not both");
  if (penalty != PenaltyKind::kNone) validate_penalty(penalty, penalty_params);
}

double ExperimentConfig::effective_tau() const {
  if (!tau_auto) return tau;
  const double n = static_cast<double>(iters);
  return algo == Algorithm::kScs ? *tau_auto * std::pow(n, -2.0 / 3.0) : *tau_auto / std::sqrt(n);
}

LossSpec ExperimentConfig::loss_spec() const { return LossSpec(loss, penalty, penalty_params); }

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '_', '-');
  const std::string v = trim(value);
  if (key == "algo") {
    if (v == "scs") {
      cfg.algo = Algorithm::kScs;
    } else if (v == "scs-spider" || v == "spider") {
      cfg.algo = Algorithm::kSpider;
    } else {
      throw ConfigError("algo: expected scs or scs-spider, got '" + v + "'");
    }
  } else if (key == "loss") {
    cfg.loss = parse_base_loss(v);
  } else if (key == "penalty") {
    cfg.penalty = parse_penalty(v);
  } else if (key == "lambda") {
    cfg.penalty_params.lambda = to_double(key, v);
  } else if (key == "gamma") {
    cfg.penalty_params.gamma = to_double(key, v);
  } else if (key == "kappa") {
    cfg.kappa = to_double(key, v);
  } else if (key == "tau") {
    cfg.tau = to_double(key, v);
    cfg.tau_auto.reset();
  } else if (key == "tau-auto") {
    cfg.tau_auto = to_double(key, v);
  } else if (key == "iters") {
    cfg.iters = to_u64(key, v);
  } else if (key == "seed") {
    cfg.seed = to_u64(key, v);
  } else if (key == "data") {
    cfg.data = v;
    cfg.synthetic.reset();
  } else if (key == "synthetic") {
    cfg.synthetic = SyntheticSpec::parse(v);
    cfg.data.clear();
  } else if (key == "box") {
    cfg.box = to_double(key, v);
  } else if (key == "spider-auto") {
    cfg.spider_auto = to_bool(key, v);
    if (cfg.spider_auto) cfg.spider.reset();
  } else if (key == "spider") {
    const auto parts = split(v, ',');
    if (parts.size() != 3) throw ConfigError("spider: expected T,B,b");
    cfg.spider = SpiderSchedule{to_u64(key, parts[1]), to_u64(key, parts[2]), to_u64(key, parts[0])};
    cfg.spider_auto = false;
  } else if (key == "spider-sigma") {
    cfg.spider_sigma = to_double(key, v);
  } else if (key == "spider-lipschitz") {
    cfg.spider_lipschitz = to_double(key, v);
  } else if (key == "spider-m") {
    cfg.spider_m = to_double(key, v);
  } else if (key == "probe-delta") {
    cfg.probe_delta = to_double(key, v);
  } else if (key == "out") {
    cfg.out = v;
  } else if (key == "trace-thin") {
    cfg.trace_thin = to_u64(key, v);
  } else if (key == "probe-every") {
    cfg.probe_every = to_u64(key, v);
  } else {
    throw ConfigError("unknown setting '" + raw_key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> read_settings(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  return read_settings(in);
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data.empty()) return load_csv(cfg.data);
  if (cfg.synthetic) return generate_synthetic(*cfg.synthetic, RngStream(cfg.seed));
  throw ConfigError("no data source: give data or synthetic");
}

namespace {

MoreauProbe harness_probe(const ExperimentConfig& cfg, const LossSpec& spec, const RiskParams& rp) {
  MoreauProbe p = MoreauProbe::standard(spec, rp, cfg.probe_delta);
  p.budget = 2000;
  return p;
}

}  // namespace

TrainSummary run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
  cfg.validate();
  const LossSpec spec = cfg.loss_spec();
  const RiskParams rp(cfg.kappa);
  const BoxConstraint box = BoxConstraint::symmetric(ds.dim(), cfg.box);
  TrainSummary s;
  s.tau = cfg.effective_tau();
  IterateObserver obs;
  if (cfg.probe_every > 0) {
    obs = [&s, &cfg](std::size_t k, const Vector& x, double) {
      if (k % cfg.probe_every == 0) s.checkpoints.emplace_back(k, x);
    };
  }
  if (cfg.algo == Algorithm::kScs) {
    ScsConfig c;
    c.tau = s.tau;
    c.iters = cfg.iters;
    c.risk = rp;
    c.box = box;
    c.seed = cfg.seed;
    c.trace_thin = cfg.trace_thin;
    c.observer = obs;
    s.run = run_scs(c, spec, ds);
  } else {
    SpiderSchedule sched;
    if (cfg.spider) {
      sched = *cfg.spider;
    } else if (cfg.spider_auto) {
      RngStream pilot = RngStream(cfg.seed).substream(Substream::kPilot);
      auto k = estimate_constants(spec, ds, box, rp, initial_point(box, std::nullopt), pilot, 64);
      k.sigma = cfg.spider_sigma.value_or(k.sigma);
      k.lipschitz = cfg.spider_lipschitz.value_or(k.lipschitz);
      k.M = cfg.spider_m.value_or(k.M);
      s.constants = k;
      sched = auto_params(k.sigma, k.lipschitz, k.M, s.tau);
      // b > B only happens with T = 1, where b is never used
      sched.small_batch = std::min(sched.small_batch, sched.large_batch);
    } else {
      SpiderConfig defaults;
      sched = SpiderSchedule{defaults.large_batch, defaults.small_batch, defaults.epoch};
    }
    s.schedule = sched;
    SpiderConfig c;
    c.tau = s.tau;
    c.iters = cfg.iters;
    c.epoch = sched.epoch;
    c.large_batch = sched.large_batch;
    c.small_batch = sched.small_batch;
    c.risk = rp;
    c.box = box;
    c.seed = cfg.seed;
    c.trace_thin = cfg.trace_thin;
    c.observer = obs;
    s.run = run_spider(c, spec, ds);
  }
  s.objective_at_output = composite_objective(spec, s.run.output, ds, rp);
  if (cfg.probe_every > 0) {
    s.grad_norm_at_output = moreau_gradient(harness_probe(cfg, spec, rp), spec, ds, rp, box, s.run.output).grad_norm;
  }
  return s;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw DataError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

void write_weights(std::ostream& out, const VectorRef& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) out << format_real(x[j]) << '\n';
}

Vector read_weights(std::istream& in) {
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    double v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) {
      throw DataError("weights line " + std::to_string(lineno) + ": not a number");
    }
    vals.push_back(v);
  }
  if (vals.empty()) throw DataError("weights file is empty");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Vector read_weights_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights '" + path + "'");
  return read_weights(in);
}

void write_checkpoints(std::ostream& out, const std::vector<std::pair<std::size_t, Vector>>& cps) {
  out << 'k';
  const Eigen::Index d = cps.empty() ? 0 : cps.front().second.size();
  for (Eigen::Index j = 0; j < d; ++j) out << ",x" << (j + 1);
  out << '\n';
  for (const auto& [k, x] : cps) {
    out << k;
    for (Eigen::Index j = 0; j < x.size(); ++j) out << ',' << format_real(x[j]);
    out << '\n';
  }
}

std::vector<std::pair<std::size_t, Vector>> read_checkpoints(std::istream& in) {
  std::vector<std::pair<std::size_t, Vector>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (lineno == 1 && trim(line).rfind("k", 0) == 0) continue;
    const auto parts = split(line, ',');
    if (parts.size() < 2) throw DataError("checkpoint line " + std::to_string(lineno) + ": too few fields");
    std::size_t k = 0;
    Vector x(static_cast<Eigen::Index>(parts.size() - 1));
    try {
      k = to_u64("k", parts[0]);
      for (std::size_t j = 1; j < parts.size(); ++j) x[static_cast<Eigen::Index>(j - 1)] = to_double("x", parts[j]);
    } catch (const ConfigError&) {
      throw DataError("checkpoint line " + std::to_string(lineno) + ": malformed field");
    }
    if (!out.empty() && out.front().second.size() != x.size()) {
      throw DataError("checkpoint line " + std::to_string(lineno) + ": dimension changed");
    }
    out.emplace_back(k, std::move(x));
  }
  return out;
}

std::vector<ProbeRow> probe_checkpoints(const ExperimentConfig& cfg, const Dataset& ds,
                                        const std::vector<std::pair<std::size_t, Vector>>& checkpoints) {
  const LossSpec spec = cfg.loss_spec();
  const RiskParams rp(cfg.kappa);
  const BoxConstraint box = BoxConstraint::symmetric(ds.dim(), cfg.box);
  const MoreauProbe probe = harness_probe(cfg, spec, rp);
  std::vector<ProbeRow> rows;
  for (const auto& [k, x] : checkpoints) {
    if (static_cast<std::size_t>(x.size()) != ds.dim()) throw DataError("probe: weight dimension does not match data");
    const auto r = moreau_gradient(probe, spec, ds, rp, box, x);
    rows.push_back(ProbeRow{k, r.grad_norm, r.envelope_value});
  }
  return rows;
}

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows) {
  out << "k,grad_norm,phi_lambda\n";
  for (const auto& r : rows) out << r.k << ',' << format_real(r.grad_norm) << ',' << format_real(r.phi_lambda) << '\n';
}

TrainSummary train(const ExperimentConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  TrainSummary s = run_experiment(cfg, ds);
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);

  std::ostringstream w;
  write_weights(w, s.run.output);
  write_file_atomic((dir / "weights.txt").string(), w.str());

  std::ostringstream t;
  s.run.trace.write_csv(t);
  write_file_atomic((dir / "trace.csv").string(), t.str());

  std::ostringstream m;
  m << "algo = " << (cfg.algo == Algorithm::kScs ? "scs" : "scs-spider") << '\n'
    << "loss = " << to_string(cfg.loss) << '\n'
    << "penalty = " << to_string(cfg.penalty) << '\n'
    << "kappa = " << format_real(cfg.kappa) << '\n'
    << "tau = " << format_real(s.tau) << '\n'
    << "iters = " << cfg.iters << '\n'
    << "seed = " << cfg.seed << '\n'
    << "n = " << ds.size() << '\n'
    << "d = " << ds.dim() << '\n';
  if (s.schedule) {
    m << "spider_T = " << s.schedule->epoch << '\n'
      << "spider_B = " << s.schedule->large_batch << '\n'
      << "spider_b = " << s.schedule->small_batch << '\n';
  }
  if (s.constants) {
    m << "spider_sigma = " << format_real(s.constants->sigma) << '\n'
      << "spider_lipschitz = " << format_real(s.constants->lipschitz) << '\n'
      << "spider_m = " << format_real(s.constants->M) << '\n';
  }
  m << "output_index = " << s.run.output_index << '\n'
    << "objective_at_output = " << format_real(s.objective_at_output) << '\n';
  if (s.grad_norm_at_output) m << "grad_norm_at_output = " << format_real(*s.grad_norm_at_output) << '\n';
  write_file_atomic((dir / "summary.txt").string(), m.str());

  if (cfg.probe_every > 0) {
    std::ostringstream c;
    write_checkpoints(c, s.checkpoints);
    write_file_atomic((dir / "checkpoints.csv").string(), c.str());
    std::ostringstream p;
    write_probe_csv(p, probe_checkpoints(cfg, ds, s.checkpoints));
    write_file_atomic((dir / "probe.csv").string(), p.str());
  }
  return s;
}

double oracle_max_gap(std::size_t trials, std::size_t max_support, std::uint64_t seed) {
  if (max_support == 0 || max_support > kOracleMaxSupport) {
    throw ArgumentError("oracle: max support must lie in [1, " + std::to_string(kOracleMaxSupport) + "]");
  }
  RngStream rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.uniform_index(max_support);
    Vector v(static_cast<Eigen::Index>(n)), p(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = rng.uniform(-10.0, 10.0);
      p[i] = 0.05 + rng.uniform();
    }
    p /= p.sum();
    const FiniteDistribution dist(v, p);
    for (double k : {0.0, 0.3, 0.7, 1.0}) {
      const RiskParams rp(k);
      worst = std::max(worst, std::abs(mean_semideviation(dist, rp) - dual_value_oracle(dist, rp)));
    }
  }
  return worst;
}

std::vector<TraceRow> thin_rows(const std::vector<TraceRow>& rows, std::size_t thin) {
  if (thin == 0) throw ArgumentError("thinning must be positive");
  std::vector<TraceRow> out;
  for (std::size_t i = 0; i < rows.size(); i += thin) out.push_back(rows[i]);
  return out;
}

}  // namespace scsdro
