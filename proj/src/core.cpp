#include "scsdro/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace scsdro {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

bool all_finite(const VectorRef& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

BoxConstraint::BoxConstraint(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ArgumentError("box: lower/upper dimension mismatch");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i]) {
      throw ArgumentError("box: require lower[i] <= upper[i] at coordinate " + std::to_string(i));
    }
  }
}

BoxConstraint BoxConstraint::symmetric(std::size_t dim, double half_width) {
  if (!(half_width >= 0.0)) throw ArgumentError("box: half width must be non-negative");
  const auto n = static_cast<Eigen::Index>(dim);
  return BoxConstraint(Vector::Constant(n, -half_width), Vector::Constant(n, half_width));
}

bool BoxConstraint::contains(const VectorRef& x) const {
  if (x.size() != lower_.size()) return false;
  return ((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all();
}

Vector project(const BoxConstraint& box, const VectorRef& x) {
  if (static_cast<std::size_t>(x.size()) != box.dim()) {
    throw ArgumentError("project: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(box.dim()) + ")");
  }
  return x.cwiseMax(box.lower()).cwiseMin(box.upper());
}

Dataset::Dataset(RowMatrix features, Vector targets)
    : features_(std::move(features)), targets_(std::move(targets)) {
  if (targets_.size() == 0) throw ArgumentError("dataset: no observations");
  if (features_.rows() != targets_.size()) throw ArgumentError("dataset: row count mismatch");
  if (features_.cols() == 0) throw ArgumentError("dataset: zero feature dimension");
  if (!features_.allFinite() || !targets_.allFinite()) {
    throw ArgumentError("dataset: non-finite feature or target");
  }
}

namespace {
RowMatrix stack_features(const std::vector<DataPoint>& points) {
  if (points.empty()) throw ArgumentError("dataset: no observations");
  const auto d = points.front().features.size();
  RowMatrix m(static_cast<Eigen::Index>(points.size()), d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].features.size() != d) throw ArgumentError("dataset: inconsistent feature dimension");
    m.row(static_cast<Eigen::Index>(i)) = points[i].features.transpose();
  }
  return m;
}

Vector stack_targets(const std::vector<DataPoint>& points) {
  Vector t(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) t[static_cast<Eigen::Index>(i)] = points[i].target;
  return t;
}
}  // namespace

Dataset::Dataset(const std::vector<DataPoint>& points)
    : Dataset(stack_features(points), stack_targets(points)) {}

DataPoint Dataset::point(std::size_t i) const { return DataPoint{features(i), target(i)}; }

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  RowMatrix f(static_cast<Eigen::Index>(indices.size()), features_.cols());
  Vector t(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw ArgumentError("dataset: subset index out of range");
    f.row(static_cast<Eigen::Index>(k)) = features_.row(static_cast<Eigen::Index>(indices[k]));
    t[static_cast<Eigen::Index>(k)] = targets_[static_cast<Eigen::Index>(indices[k])];
  }
  return Dataset(std::move(f), std::move(t));
}

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

RngStream RngStream::substream(std::uint64_t id) const {
  return RngStream(mix64(key_ ^ mix64(id ^ 0xD1B54A32D192ED03ULL)), 0, 0);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index: empty range");
  const std::uint64_t range = n;
  // Lemire's multiply-shift with rejection of the biased low region.
  const std::uint64_t threshold = (0 - range) % range;
  while (true) {
    const auto r = next_u64();
    const auto m = static_cast<unsigned __int128>(r) * range;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::size_t>(m >> 64);
  }
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> sample_indices(const Dataset& ds, RngStream& rng, std::size_t count) {
  if (count == 0) throw ArgumentError("sample: count must be positive");
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = rng.uniform_index(ds.size());
  return idx;
}

std::vector<DataPoint> sample_iid(const Dataset& ds, RngStream& rng, std::size_t count) {
  std::vector<DataPoint> out;
  out.reserve(count);
  for (auto i : sample_indices(ds, rng, count)) out.push_back(ds.point(i));
  return out;
}

Dataset parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size() && numeric; ++c) numeric = parse_double(cells[c], values[c]);
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = cells.size();  // header row
        continue;
      }
      throw DataError("csv line " + std::to_string(line_no) + ": non-numeric value");
    }
    if (cells.size() < 2) throw DataError("csv line " + std::to_string(line_no) + ": need features and a target");
    if (width != 0 && cells.size() != width) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " columns, got " +
                      std::to_string(cells.size()));
    }
    width = cells.size();
    for (double v : values) {
      if (!std::isfinite(v)) throw DataError("csv line " + std::to_string(line_no) + ": non-finite value");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("csv: no data rows");
  RowMatrix f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  Vector t(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c + 1 < width; ++c) {
      f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    t[static_cast<Eigen::Index>(r)] = rows[r].back();
  }
  return Dataset(std::move(f), std::move(t));
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t j = 0; j < ds.dim(); ++j) out << 'a' << j + 1 << ',';
  out << "b\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto a = ds.features(i);
    for (Eigen::Index j = 0; j < a.size(); ++j) out << format_real(a[j]) << ',';
    out << format_real(ds.target(i)) << '\n';
  }
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace scsdro
