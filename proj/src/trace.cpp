#include "scsdro/trace.hpp"

#include <charconv>
#include <string>

namespace scsdro {
namespace {

constexpr const char* kScsHeader = "k,F_hat,u,track_err,step_norm";
constexpr const char* kSpiderHeader = "k,F_hat,u,track_err,step_norm,epoch,batch_size";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

template <class T>
T parse_cell(const std::string& s, std::size_t line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("trace line " + std::to_string(line_no) + ": bad value '" + s + "'");
  }
  return v;
}

}  // namespace

void RunTrace::write_csv(std::ostream& out) const {
  out << (spider ? kSpiderHeader : kScsHeader) << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << format_real(r.F_hat) << ',' << format_real(r.u) << ',' << format_real(r.track_err) << ','
        << format_real(r.step_norm);
    if (spider) out << ',' << r.epoch << ',' << r.batch_size;
    out << '\n';
  }
}

RunTrace RunTrace::read_csv(std::istream& in) {
  RunTrace t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("trace: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == kSpiderHeader) {
    t.spider = true;
  } else if (line != kScsHeader) {
    throw DataError("trace line 1: unrecognised header");
  }
  const std::size_t width = t.spider ? 7 : 5;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != width) {
      throw DataError("trace line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    }
    TraceRow r;
    r.k = parse_cell<std::size_t>(cells[0], line_no);
    r.F_hat = parse_cell<double>(cells[1], line_no);
    r.u = parse_cell<double>(cells[2], line_no);
    r.track_err = parse_cell<double>(cells[3], line_no);
    r.step_norm = parse_cell<double>(cells[4], line_no);
    if (t.spider) {
      r.epoch = parse_cell<std::size_t>(cells[5], line_no);
      r.batch_size = parse_cell<std::size_t>(cells[6], line_no);
    }
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace scsdro
