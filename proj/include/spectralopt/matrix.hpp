#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectralopt {

// Shape or precondition violations.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, non-SPD inputs and similar numeric failures.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iteration exhausted its budget without meeting its tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Entries are checked for finiteness on
// construction, so an operation that would overflow reports NumericError
// instead of handing back a poisoned matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);
  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }
  std::size_t size() const { return data_.size(); }

  double operator()(int r, int c) const { return data_[index(r, c)]; }
  double& operator()(int r, int c) { return data_[index(r, c)]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Throws NumericError naming `what` if any entry is not finite.
  void check_finite(const std::string& what) const;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

bool same_shape(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
bool operator==(const Matrix& a, const Matrix& b);  // exact, bitwise per entry

// Text format: first line "rows cols", then one line per row of
// space-separated values printed with enough digits to round-trip exactly.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace spectralopt
