#include "defect/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace defect {
namespace {

[[noreturn]] void fail(const std::string& name, int line, const std::string& what) {
  throw ParseError(name + ":" + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

MatrixMarketData read_matrix_market(std::istream& in, const std::string& name) {
  std::string header;
  int lineno = 1;
  if (!std::getline(in, header)) fail(name, 1, "empty file");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") fail(name, 1, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") fail(name, 1, "unsupported object: " + object);
  if (format != "coordinate" && format != "array") fail(name, 1, "unsupported format: " + format);
  if (field == "pattern") throw UnsupportedFormat(name + ": pattern field is not supported");
  if (field != "real" && field != "complex" && field != "integer")
    throw UnsupportedFormat(name + ": unsupported field: " + field);
  if (symmetry == "skew-symmetric" || symmetry == "hermitian")
    throw UnsupportedFormat(name + ": unsupported symmetry: " + symmetry);
  if (symmetry != "general" && symmetry != "symmetric")
    throw UnsupportedFormat(name + ": unsupported symmetry: " + symmetry);

  std::string line;
  auto next_data_line = [&](bool required) -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      size_t pos = line.find_first_not_of(" \t\r\n");
      if (pos == std::string::npos || line[pos] == '%') continue;
      return true;
    }
    if (required) fail(name, lineno, "unexpected end of file");
    return false;
  };

  if (!next_data_line(true)) fail(name, lineno, "missing size line");
  std::istringstream sz(line);
  long rows = 0, cols = 0, nnz = 0;
  const bool coordinate = format == "coordinate";
  const bool complex_field = field == "complex";
  if (coordinate) {
    if (!(sz >> rows >> cols >> nnz)) fail(name, lineno, "bad coordinate size line");
  } else {
    if (!(sz >> rows >> cols)) fail(name, lineno, "bad array size line");
  }
  if (rows <= 0 || cols <= 0) fail(name, lineno, "non-positive dimensions");

  MatrixMarketData out;
  out.complex_field = complex_field;
  out.matrix = CMatrix::Zero(rows, cols);
  out.mask = Mask::Constant(rows, cols, false);

  auto store = [&](long i, long j, Complex v) {
    out.matrix(i, j) = v;
    out.mask(i, j) = true;
    if (symmetry == "symmetric" && i != j) {
      out.matrix(j, i) = v;
      out.mask(j, i) = true;
    }
  };

  if (coordinate) {
    for (long e = 0; e < nnz; ++e) {
      next_data_line(true);
      std::istringstream ls(line);
      long i = 0, j = 0;
      double re = 0, im = 0;
      if (!(ls >> i >> j >> re)) fail(name, lineno, "bad coordinate entry");
      if (complex_field && !(ls >> im)) fail(name, lineno, "missing imaginary part");
      if (i < 1 || i > rows || j < 1 || j > cols) fail(name, lineno, "index out of range");
      store(i - 1, j - 1, Complex(re, im));
    }
  } else {
    // array format: column-major dense; symmetric files store the lower triangle
    for (long j = 0; j < cols; ++j) {
      long i0 = symmetry == "symmetric" ? j : 0;
      for (long i = i0; i < rows; ++i) {
        next_data_line(true);
        std::istringstream ls(line);
        double re = 0, im = 0;
        if (!(ls >> re)) fail(name, lineno, "bad array entry");
        if (complex_field && !(ls >> im)) fail(name, lineno, "missing imaginary part");
        store(i, j, Complex(re, im));
      }
    }
    out.mask = Mask::Constant(rows, cols, true);
  }
  check_finite(out.matrix, "matrix market data");
  return out;
}

MatrixMarketData read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_matrix_market(in, path);
}

void write_matrix_market(const CMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  const bool cplx = !is_real(m);
  out << "%%MatrixMarket matrix array " << (cplx ? "complex" : "real") << " general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  out.precision(17);
  out << std::scientific;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out << m(i, j).real();
      if (cplx) out << ' ' << m(i, j).imag();
      out << '\n';
    }
  if (!out) throw Error(path + ": write failed");
}

}  // namespace defect
