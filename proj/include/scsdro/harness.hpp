#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scsdro/core.hpp"
#include "scsdro/models.hpp"
#include "scsdro/spider.hpp"
#include "scsdro/trace.hpp"

namespace scsdro {

/// Regression data: features uniform in [-1, 1]^d, targets <w*, a> + noise.
/// A `tail_fraction` of the points get one-sided noise multiplier * noise * |N(0,1)|.
struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t d = 10;
  std::optional<Vector> weights;  // drawn uniform in [-1, 1]^d when absent
  double noise = 0.1;
  double tail_fraction = 0.1;
  double tail_multiplier = 10.0;
  bool intercept = false;  // last feature fixed at 1
  std::optional<std::uint64_t> weight_seed;  // draw w* from this seed instead

  void validate() const;
  /// "n=500,d=10,noise=0.1,frac=0.1,mult=10,intercept=1,wseed=3"; unknown keys throw.
  static SyntheticSpec parse(const std::string& text);
};

/// w*: spec.weights, or a draw from the Weights substream of `rng` (or of
/// RngStream(weight_seed) when set).
Vector true_weights(const SyntheticSpec& spec, const RngStream& rng);

/// Deterministic in (spec, rng key); noise comes from the Data substream.
Dataset generate_synthetic(const SyntheticSpec& spec, const RngStream& rng);

enum class Algorithm { kScs, kSpider };

struct ExperimentConfig {
  Algorithm algo = Algorithm::kScs;
  BaseLoss loss = BaseLoss::kMad;
  PenaltyKind penalty = PenaltyKind::kNone;
  PenaltyParams penalty_params{};
  double kappa = 0.0;
  double tau = 0.01;
  std::optional<double> tau_auto;  // c in tau = c N^{-2/3} (scs) or c N^{-1/2} (spider)
  std::size_t iters = 1000;
  double box = 10.0;
  std::uint64_t seed = 0;
  std::string data;                       // CSV path
  std::optional<SyntheticSpec> synthetic; // used when data is empty
  std::optional<SpiderSchedule> spider;   // explicit T, B, b
  bool spider_auto = false;
  // Replace the pilot estimates fed to auto_params.
  std::optional<double> spider_sigma, spider_lipschitz, spider_m;
  std::optional<double> probe_delta;  // weak-convexity modulus used for the probe's lambda
  std::size_t trace_thin = 1;
  std::size_t probe_every = 0;  // 0 disables Moreau probing
  std::string out = ".";

  void validate() const;
  double effective_tau() const;
  LossSpec loss_spec() const;
};

/// Applies one `key = value` setting (keys as in the flag names, `_` or `-`).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Line-oriented `key = value`; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> read_settings(std::istream& in);
std::vector<std::pair<std::string, std::string>> read_settings_file(const std::string& path);

Dataset load_dataset(const ExperimentConfig& cfg);

struct TrainSummary {
  RunResult run;
  std::optional<SpiderSchedule> schedule;
  std::optional<SpiderConstants> constants;  // set with spider-auto
  double tau = 0.0;
  double objective_at_output = 0.0;
  std::optional<double> grad_norm_at_output;
  std::vector<std::pair<std::size_t, Vector>> checkpoints;
};

/// Runs the configured algorithm on `ds` without touching the filesystem.
TrainSummary run_experiment(const ExperimentConfig& cfg, const Dataset& ds);

/// run_experiment plus weights.txt, trace.csv, summary.txt (and
/// checkpoints.csv / probe.csv when probing) under cfg.out.
TrainSummary train(const ExperimentConfig& cfg);

struct ProbeRow {
  std::size_t k = 0;
  double grad_norm = 0.0;
  double phi_lambda = 0.0;
};

/// Moreau probe at each checkpoint with lambda = 1/rho_bar.
std::vector<ProbeRow> probe_checkpoints(const ExperimentConfig& cfg, const Dataset& ds,
                                        const std::vector<std::pair<std::size_t, Vector>>& checkpoints);

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows);

/// One real per line.
void write_weights(std::ostream& out, const VectorRef& x);
Vector read_weights(std::istream& in);
Vector read_weights_file(const std::string& path);

/// Rows "k,x_1,...,x_d".
void write_checkpoints(std::ostream& out, const std::vector<std::pair<std::size_t, Vector>>& cps);
std::vector<std::pair<std::size_t, Vector>> read_checkpoints(std::istream& in);

/// Writes to path + ".tmp" and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Largest |mean_semideviation - dual_value_oracle| over random instances.
double oracle_max_gap(std::size_t trials, std::size_t max_support, std::uint64_t seed);

/// Rows k of a trace kept by thinning every `thin`-th recorded row.
std::vector<TraceRow> thin_rows(const std::vector<TraceRow>& rows, std::size_t thin);

/// Command-line entry point; returns the process exit status
/// (0 ok, 1 usage, 2 data, 3 numeric).
int run_cli(int argc, const char* const* argv);

}  // namespace scsdro
