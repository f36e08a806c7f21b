#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "scsdro/core.hpp"

namespace scsdro {

/// One recorded iteration. `F_hat` and `track_err` use full-batch F(x^k)
/// and h(x^k); `step_norm` is ||x^{k+1} - x^k||.
struct TraceRow {
  std::size_t k = 0;
  double F_hat = 0.0;
  double u = 0.0;
  double track_err = 0.0;
  double step_norm = 0.0;
  std::size_t epoch = 0;       // SPIDER only
  std::size_t batch_size = 0;  // SPIDER only
};

struct RunTrace {
  bool spider = false;
  std::vector<TraceRow> rows;

  /// Header `k,F_hat,u,track_err,step_norm` plus `,epoch,batch_size` for SPIDER.
  void write_csv(std::ostream& out) const;
  /// Accepts either header; malformed rows throw DataError naming the line.
  static RunTrace read_csv(std::istream& in);
};

/// Called with (k, x^k, u^k) before step k.
using IterateObserver = std::function<void(std::size_t, const Vector&, double)>;

struct RunResult {
  RunTrace trace;
  Vector output;               // x^R
  std::size_t output_index = 0;  // R
  Vector final_x;              // x^N
  double final_u = 0.0;        // last tracker value
};

}  // namespace scsdro
