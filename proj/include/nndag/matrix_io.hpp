#pragma once

// Plain-text CSV matrices: one row per line, comma-separated decimals, no
// header. Dimensions are inferred from the file.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nndag/errors.hpp"
#include "nndag/graph.hpp"

namespace nndag {

/// Shortest "%.{digits}g" rendering; nan/inf spelled as such.
inline std::string format_number(double v, int digits = 17) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline Matrix parse_matrix_csv(std::istream& in, const std::string& what = "matrix") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(begin, &end);
      while (*end == ' ' || *end == '\t') ++end;
      if (end == begin || *end != '\0' || errno == ERANGE)
        throw InputError(what + ": bad number '" + cell + "' on line " +
                         std::to_string(lineno));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(what + ": ragged row on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(what + ": empty file");

  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_matrix_csv(in, path);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_matrix_csv(out, m);
}

}  // namespace nndag
