#pragma once

// Grid field files:
//
//   dim,<n>
//   origin,<o_1>,...,<o_n>
//   spacing,<h_1>,...,<h_n>
//   shape,<k_1>,...,<k_n>
//   <value>            (one per line, row-major, last axis fastest)
//
// Values are written with 17 significant digits so a write/read cycle is
// lossless. NaN and Inf are rejected on read.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iat/field.hpp"

namespace iat::io {

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& token, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error("io", ErrorCode::ParseError, "line " + std::to_string(line) + ": not a number: '" + token + "'");
  }
  if (!std::isfinite(v)) {
    throw Error("io", ErrorCode::ParseError, "line " + std::to_string(line) + ": non-finite value");
  }
  return v;
}

inline std::vector<double> parse_row(const std::string& line, std::string_view key, std::size_t expected,
                                     std::size_t lineno) {
  auto parts = split(line);
  if (parts.empty() || parts[0] != key || parts.size() != expected + 1) {
    throw Error("io", ErrorCode::ParseError,
                "line " + std::to_string(lineno) + ": expected '" + std::string(key) + "' with " +
                    std::to_string(expected) + " entries");
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < parts.size(); ++i) out.push_back(parse_double(parts[i], lineno));
  return out;
}

}  // namespace detail

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline ScalarField read_field(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next()) throw Error("io", ErrorCode::ParseError, "empty field file");
  auto dim_row = detail::split(line);
  if (dim_row.size() != 2 || dim_row[0] != "dim") {
    throw Error("io", ErrorCode::ParseError, "line 1: expected 'dim,<n>'");
  }
  const double dim_v = detail::parse_double(dim_row[1], lineno);
  if (dim_v < 1 || dim_v != std::floor(dim_v)) throw Error("io", ErrorCode::ParseError, "dim must be a positive integer");
  const auto n = static_cast<std::size_t>(dim_v);
  if (!next()) throw Error("io", ErrorCode::ParseError, "missing origin line");
  auto origin = detail::parse_row(line, "origin", n, lineno);
  if (!next()) throw Error("io", ErrorCode::ParseError, "missing spacing line");
  auto spacing = detail::parse_row(line, "spacing", n, lineno);
  if (!next()) throw Error("io", ErrorCode::ParseError, "missing shape line");
  auto shape_v = detail::parse_row(line, "shape", n, lineno);
  std::vector<std::size_t> shape;
  for (double k : shape_v) {
    if (k < 1 || k != std::floor(k)) throw Error("io", ErrorCode::ParseError, "shape entries must be positive integers");
    shape.push_back(static_cast<std::size_t>(k));
  }
  GridSpec grid(origin, spacing, shape);
  std::vector<double> values;
  values.reserve(grid.size());
  while (next()) values.push_back(detail::parse_double(detail::split(line).at(0), lineno));
  if (values.size() != grid.size()) {
    throw Error("io", ErrorCode::ParseError,
                "expected " + std::to_string(grid.size()) + " values, found " + std::to_string(values.size()));
  }
  return ScalarField(std::move(grid), std::move(values));
}

inline void write_field(std::ostream& out, const ScalarField& f) {
  const GridSpec& g = f.grid();
  out << "dim," << g.dim() << '\n';
  out << "origin";
  for (double v : g.origin()) out << ',' << format_double(v);
  out << "\nspacing";
  for (double v : g.spacing()) out << ',' << format_double(v);
  out << "\nshape";
  for (auto k : g.shape()) out << ',' << k;
  out << '\n';
  for (double v : f.values()) out << format_double(v) << '\n';
}

/// Writes through a temporary file and renames it into place.
template <class Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw Error("io", ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io", ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline ScalarField load_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", ErrorCode::IoError, "cannot open " + path.string());
  return read_field(in);
}

inline void save_field(const std::filesystem::path& path, const ScalarField& f) {
  write_atomically(path, [&](std::ostream& out) { write_field(out, f); });
}

/// Region files are field files whose nonzero values mark member cells.
inline Region load_region(const std::filesystem::path& path) { return Region::support(load_field(path)); }

inline ScalarField region_as_field(const Region& r) {
  std::vector<double> v(r.grid().size(), 0.0);
  for (auto c : r.cells()) v[c] = 1.0;
  return ScalarField(r.grid(), std::move(v));
}

/// Points file: one point per line, comma-separated coordinates. Lines that
/// do not start with a number (headers, comments) are skipped.
inline std::vector<Point> read_points(std::istream& in, std::size_t dim) {
  std::vector<Point> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = detail::split(line);
    if (parts.empty() || parts[0].empty()) continue;
    const char c = parts[0][0];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) continue;
    if (parts.size() != dim) {
      throw Error("io", ErrorCode::ParseError,
                  "line " + std::to_string(lineno) + ": expected " + std::to_string(dim) + " coordinates");
    }
    Point p;
    for (auto& t : parts) p.push_back(detail::parse_double(t, lineno));
    pts.push_back(std::move(p));
  }
  return pts;
}

inline std::vector<Point> load_points(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw Error("io", ErrorCode::IoError, "cannot open " + path.string());
  return read_points(in, dim);
}

}  // namespace iat::io
