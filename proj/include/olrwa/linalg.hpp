#pragma once

// Small dense linear algebra: exactly what the learners need and nothing
// more. All matrices here are at most a few thousand rows by a few hundred
// columns, so everything is row-major, unblocked and allocation-light.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace olrwa {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const noexcept { return data_; }

  void append_row(std::span<const double> values);

  // Rows [first, first + count) as a new matrix.
  Matrix slice_rows(std::size_t first, std::size_t count) const;
  Matrix select_rows(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Prepends an all-ones column.
Matrix with_bias_column(const Matrix& x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);

// y = A x
Vector multiply(const Matrix& a, std::span<const double> x);
// y = A^T x
Vector multiply_transposed(const Matrix& a, std::span<const double> x);

struct LeastSquaresSolution {
  Vector weights;
  // Set when X^T X was singular or too badly conditioned and the
  // Tikhonov-damped system was solved instead.
  bool damped = false;
};

// Minimises ||Xw - y||_2 via the normal equations and a Cholesky solve.
// Falls back to (X^T X + eps I)^{-1} X^T y, eps = 1e-8 trace(X^T X) / D, when
// the factorisation fails or the condition estimate exceeds 1e12.
// Throws ContractViolation on shape mismatch and InputError on NaN/inf.
LeastSquaresSolution solve_least_squares(const Matrix& x, std::span<const double> y);

// Same solve starting from an accumulated Gram matrix X^T X and X^T y.
LeastSquaresSolution solve_normal_equations(const Matrix& gram, std::span<const double> rhs);

// True when the two rows are linearly independent by the Gram test
// det(A A^T) > 1e-12 * |a1|^2 |a2|^2.
bool rows_independent(std::span<const double> a1, std::span<const double> a2);

// Minimum-norm x with A x = b for a 2 x D system, x = A^T (A A^T)^{-1} b,
// computed through an LQ factorisation with one refinement step.
// Throws DegenerateSystem when the rows are dependent.
Vector min_norm_solution(const Matrix& a, std::span<const double> b);

// v / ||v||_2. Throws ZeroVector when ||v|| <= 1e-12.
Vector normalize(std::span<const double> v);

}  // namespace olrwa
