#include "spectralopt/matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace spectralopt {

namespace {

void check_dims(int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("matrix dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  check_dims(rows, cols);
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check_dims(rows, cols);
  if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DimensionError("matrix data size " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  check_finite("matrix construction");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  int r = static_cast<int>(rows.size());
  if (r == 0) throw DimensionError("from_rows: no rows");
  int c = static_cast<int>(rows.begin()->size());
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(c));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) {
      throw DimensionError("from_rows: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::check_finite(const std::string& what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw NumericError(what + ": non-finite value encountered");
    }
  }
}

bool same_shape(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!same_shape(a, b)) throw DimensionError("operator+: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  out.check_finite("operator+");
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!same_shape(a, b)) throw DimensionError("operator-: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  out.check_finite("operator-");
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = s * a.data()[i];
  out.check_finite("scalar multiply");
  return out;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return same_shape(a, b) && a.data() == b.data();
}

std::string format_double(double v) {
  // %.17g always round-trips a double; trim to the shortest form that does.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    auto [ptr, ec] = std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    (void)ptr;
    if (ec == std::errc() && back == v) break;
  }
  return buf;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is) {
  int rows = 0, cols = 0;
  if (!(is >> rows >> cols)) {
    throw NumericError("matrix read: malformed header, expected 'rows cols'");
  }
  check_dims(rows, cols);
  std::vector<double> data(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (auto& v : data) {
    if (!(is >> v)) {
      throw NumericError("matrix read: not enough values for " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
  }
  return Matrix(rows, cols, std::move(data));
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw NumericError("cannot open for writing: " + path);
  write_matrix(os, m);
  if (!os) throw NumericError("write failed: " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NumericError("cannot open: " + path);
  return read_matrix(is);
}

}  // namespace spectralopt
