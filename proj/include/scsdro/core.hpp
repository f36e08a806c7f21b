#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scsdro/errors.hpp"

namespace scsdro {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool all_finite(const VectorRef& v);

/// Axis-aligned feasible set {x : lower <= x <= upper}.
class BoxConstraint {
 public:
  BoxConstraint(Vector lower, Vector upper);

  /// The symmetric box ||x||_inf <= half_width in `dim` coordinates.
  static BoxConstraint symmetric(std::size_t dim, double half_width);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  bool contains(const VectorRef& x) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Euclidean projection onto the box (per-coordinate clamp).
Vector project(const BoxConstraint& box, const VectorRef& x);

struct DataPoint {
  Vector features;
  double target = 0.0;
};

/// Finite sample carrying the uniform empirical distribution.
class Dataset {
 public:
  Dataset(RowMatrix features, Vector targets);
  explicit Dataset(const std::vector<DataPoint>& points);

  std::size_t size() const { return static_cast<std::size_t>(targets_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }

  auto features(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double target(std::size_t i) const { return targets_[static_cast<Eigen::Index>(i)]; }
  DataPoint point(std::size_t i) const;

  const RowMatrix& feature_matrix() const { return features_; }
  const Vector& targets() const { return targets_; }

  Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  RowMatrix features_;
  Vector targets_;
};

// Substream identifiers. A run derives every random source from one master
// seed as RngStream(seed).substream(id); the ids are part of the file format
// contract for reproducibility and must not be renumbered.
enum class Substream : std::uint64_t {
  kPilot = 1,   // tracker initialisation / constant estimation
  kD1 = 2,      // gate sample
  kD2 = 3,      // inner-gradient sample
  kD3 = 4,      // tracker-Jacobian sample
  kBatch = 5,   // SPIDER restart/refresh batches
  kOutput = 6,  // index R of the returned iterate
  kData = 7,    // synthetic data generation
  kWeights = 8, // synthetic true weights
};

/// Counter-based generator: output j is a SplitMix64 finalisation of
/// key + (j + 1) * 0x9E3779B97F4A7C15. Streams with equal key and counter
/// produce identical sequences on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Independent child stream: key' = mix(key ^ mix(id ^ 0xD1B54A32D192ED03)).
  RngStream substream(std::uint64_t id) const;
  RngStream substream(Substream id) const { return substream(static_cast<std::uint64_t>(id)); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on {0, ..., n-1} without modulo bias.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::vector<std::size_t> sample_indices(const Dataset& ds, RngStream& rng, std::size_t count);

/// i.i.d. draws with replacement from the empirical distribution of `ds`.
std::vector<DataPoint> sample_iid(const Dataset& ds, RngStream& rng, std::size_t count);

/// Comma-separated rows, last column is the target. A first row that does
/// not parse as numbers is treated as a header.
Dataset parse_csv(std::istream& in);
Dataset load_csv(const std::string& path);
void write_csv(std::ostream& out, const Dataset& ds);

/// Shortest-round-trip-safe text form ("%.17g") used by every file writer.
std::string format_real(double v);

}  // namespace scsdro
