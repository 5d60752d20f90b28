#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "prextra/network.hpp"
#include "prextra/types.hpp"

namespace prextra::io {

static_assert(std::endian::native == std::endian::little, "MXA1 I/O assumes a little-endian host");

/// Shortest-safe decimal form: 17 significant digits round-trip any double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw FormatError("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("not a number: '" + s + "'");
  }
}

// MXA1 binary matrix: "MXA1", u64 rows, u64 cols, rows*cols row-major f64,
// all little-endian.

inline constexpr std::array<char, 4> kMagic{'M', 'X', 'A', '1'};

inline void write_mxa1(const std::string& path, const Eigen::Ref<const Matrix>& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kMagic.data(), 4);
  const std::uint64_t rows = static_cast<std::uint64_t>(a.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(a.cols());
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * 8));
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline Matrix read_mxa1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw FormatError("'" + path + "' is not an MXA1 file");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in) throw FormatError("'" + path + "': truncated header");
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw FormatError("'" + path + "': implausible dimensions");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(rows),
                                                                            static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rows * cols * 8));
  if (!in) throw FormatError("'" + path + "': truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("'" + path + "': trailing bytes");
  return rm;
}

namespace detail {
inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}
}  // namespace detail

/// CSV matrix: first line "rows,cols", then one comma-separated row per line.
inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "': empty file");
  const auto header = detail::split(detail::strip(line), ',');
  if (header.size() != 2) throw FormatError("'" + path + "': header must be 'rows,cols'");
  const long rows = std::stol(header[0]);
  const long cols = std::stol(header[1]);
  if (rows <= 0 || cols <= 0) throw FormatError("'" + path + "': non-positive dimensions");
  Matrix a(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw FormatError("'" + path + "': expected " + std::to_string(rows) + " rows");
    const auto cells = detail::split(detail::strip(line), ',');
    if (static_cast<long>(cells.size()) != cols)
      throw FormatError("'" + path + "': row " + std::to_string(i + 1) + " has wrong column count");
    for (long j = 0; j < cols; ++j) a(i, j) = parse_double(detail::strip(cells[static_cast<std::size_t>(j)]));
  }
  while (std::getline(in, line))
    if (!detail::strip(line).empty()) throw FormatError("'" + path + "': extra rows");
  return a;
}

inline void write_csv_matrix(const std::string& path, const Eigen::Ref<const Matrix>& a) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << a.rows() << ',' << a.cols() << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << format_double(a(i, j));
    out << '\n';
  }
}

/// Dispatches on the magic bytes: MXA1 binary or CSV text.
inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in && magic == kMagic) return read_mxa1(path);
  return read_csv_matrix(path);
}

// Weight file: first line "n", then "i j w_ij" per upper-triangle edge
// (0-based). Diagonal entries are implied as 1 - sum of the row unless given
// explicitly as "i i w_ii".

inline void write_weights(const std::string& path, const MixingMatrix& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  const auto n = m.W.rows();
  out << n << '\n';
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (m.W(i, j) != 0.0) out << i << ' ' << j << ' ' << format_double(m.W(i, j)) << '\n';
}

struct WeightFile {
  MixingMatrix mixing;
  Graph graph;
};

inline WeightFile read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "': empty file");
  const long n = std::stol(detail::strip(line));
  if (n < 1) throw FormatError("'" + path + "': n must be >= 1");
  Matrix w = Matrix::Zero(n, n);
  std::vector<bool> explicit_diag(static_cast<std::size_t>(n), false);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    long i = -1, j = -1;
    std::string wtok, extra;
    if (!(ss >> i >> j >> wtok) || (ss >> extra))
      throw FormatError("'" + path + "': malformed line " + std::to_string(lineno));
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw FormatError("'" + path + "': index out of range on line " + std::to_string(lineno));
    const double v = parse_double(wtok);
    if (i == j) {
      w(i, i) = v;
      explicit_diag[static_cast<std::size_t>(i)] = true;
    } else {
      w(i, j) = v;
      w(j, i) = v;
      edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (explicit_diag[static_cast<std::size_t>(i)]) continue;
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return {MixingMatrix::from_weights(std::move(w)), Graph::from_edges(static_cast<std::size_t>(n), std::move(edges))};
}

}  // namespace prextra::io
