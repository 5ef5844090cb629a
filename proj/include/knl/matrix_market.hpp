#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "knl/core.hpp"

namespace knl {

/// Reads a "matrix coordinate real symmetric" Matrix Market file, expanding
/// the stored triangle.
inline SparseSpdOperator load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++lineno;
  {
    std::istringstream hdr(line);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
      throw ParseError(lineno, "bad banner");
    if (format != "coordinate" || field != "real" || symmetry != "symmetric")
      throw NotSymmetricHeader();
  }
  Eigen::Index rows = 0, cols = 0;
  long long nnz = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sz(line);
    if (!(sz >> rows >> cols >> nnz)) throw ParseError(lineno, "bad size line");
    break;
  }
  if (rows == 0 || rows != cols) throw ParseError(lineno, "bad dimensions");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(2 * nnz));
  long long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    Eigen::Index i, j;
    double v;
    if (!(entry >> i >> j >> v)) throw ParseError(lineno, "bad entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(lineno, "index out of range");
    trips.emplace_back(i - 1, j - 1, v);
    if (i != j) trips.emplace_back(j - 1, i - 1, v);
    ++seen;
  }
  if (seen != nnz) throw ParseError(lineno, "entry count mismatch");
  SparseSpdOperator::Sparse a(rows, cols);
  a.setFromTriplets(trips.begin(), trips.end());
  return SparseSpdOperator(std::move(a));
}

inline void save_matrix_market(const std::string& path,
                               const SparseSpdOperator& a) {
  std::ofstream out(path);
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  const auto& m = a.matrix();
  long long nnz = 0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseSpdOperator::Sparse::InnerIterator it(m, k); it; ++it)
      if (it.row() >= it.col()) ++nnz;
  out << m.rows() << " " << m.cols() << " " << nnz << "\n";
  out.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseSpdOperator::Sparse::InnerIterator it(m, k); it; ++it)
      if (it.row() >= it.col())
        out << it.row() + 1 << " " << it.col() + 1 << " " << it.value()
            << "\n";
}

/// Reads a dense "matrix array real general" block (column-major entries).
inline Mat load_dense_block(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++lineno;
  {
    std::istringstream hdr(line);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix" ||
        format != "array" || field != "real" || symmetry != "general")
      throw ParseError(lineno, "expected array real general header");
  }
  Eigen::Index rows = 0, cols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sz(line);
    if (!(sz >> rows >> cols)) throw ParseError(lineno, "bad size line");
    break;
  }
  Mat b(rows, cols);
  Eigen::Index count = 0;
  double v;
  while (in >> v) {
    if (count >= rows * cols) throw ParseError(lineno, "too many entries");
    b(count % rows, count / rows) = v;
    ++count;
  }
  if (count != rows * cols) throw ParseError(lineno, "too few entries");
  return b;
}

inline void save_dense_block(const std::string& path, const Mat& b) {
  std::ofstream out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << b.rows() << " " << b.cols() << "\n";
  out.precision(17);
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    for (Eigen::Index i = 0; i < b.rows(); ++i) out << b(i, j) << "\n";
}

}  // namespace knl
