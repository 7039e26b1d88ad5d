#include "olrwa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "olrwa/errors.hpp"

namespace olrwa {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractViolation("Matrix: data length " + std::to_string(data_.size()) +
                            " != rows*cols " + std::to_string(rows * cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ContractViolation("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw ContractViolation("Matrix::append_row: expected " + std::to_string(cols_) +
                            " values, got " + std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::slice_rows(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw ContractViolation("Matrix::slice_rows: out of range");
  auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
  return Matrix(count, cols_,
                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t idx : indices) {
    if (idx >= rows_) throw ContractViolation("Matrix::select_rows: index out of range");
    auto r = row(idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Matrix(indices.size(), cols_, std::move(out));
}

Matrix with_bias_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out(r, 0) = 1.0;
    std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin() + 1);
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ContractViolation("multiply: shape mismatch");
  Vector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
  return y;
}

Vector multiply_transposed(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw ContractViolation("multiply_transposed: shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

namespace {

// In-place lower Cholesky factor of a symmetric matrix. Returns false when a
// pivot is not strictly positive.
bool cholesky(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  return true;
}

Vector cholesky_solve(const Matrix& l, Vector b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
  return b;
}

// Squared ratio of the extreme Cholesky pivots. Cheap lower bound on the
// 2-norm condition number of the Gram matrix; good enough to catch the
// near-singular systems that matter here.
double condition_estimate(const Matrix& l) {
  double lo = l(0, 0), hi = l(0, 0);
  for (std::size_t i = 1; i < l.rows(); ++i) {
    lo = std::min(lo, l(i, i));
    hi = std::max(hi, l(i, i));
  }
  const double r = hi / lo;
  return r * r;
}

Matrix gram(const Matrix& x) {
  const std::size_t d = x.cols();
  Matrix g(d, d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = row[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j <= i; ++j) g(i, j) += xi * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
  return g;
}

}  // namespace

LeastSquaresSolution solve_least_squares(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0 || x.cols() == 0) throw ContractViolation("solve_least_squares: empty design");
  if (x.rows() != y.size()) {
    throw ContractViolation("solve_least_squares: X has " + std::to_string(x.rows()) +
                            " rows but y has " + std::to_string(y.size()));
  }
  if (!all_finite(x.data()) || !all_finite(y)) {
    throw InputError("solve_least_squares: non-finite input");
  }

  return solve_normal_equations(gram(x), multiply_transposed(x, y));
}

LeastSquaresSolution solve_normal_equations(const Matrix& g, std::span<const double> rhs_in) {
  if (g.rows() == 0 || g.rows() != g.cols() || rhs_in.size() != g.rows()) {
    throw ContractViolation("solve_normal_equations: shape mismatch");
  }
  if (!all_finite(g.data()) || !all_finite(rhs_in)) {
    throw InputError("solve_normal_equations: non-finite input");
  }
  const Vector rhs(rhs_in.begin(), rhs_in.end());
  Matrix l = g;
  if (cholesky(l) && condition_estimate(l) <= 1e12) {
    return {cholesky_solve(l, rhs), false};
  }

  const std::size_t d = g.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += g(i, i);
  // An all-zero design still needs a positive shift.
  const double eps = trace > 0.0 ? 1e-8 * trace / static_cast<double>(d) : 1e-8;
  l = g;
  for (std::size_t i = 0; i < d; ++i) l(i, i) += eps;
  if (!cholesky(l)) throw InputError("solve_least_squares: damped system not positive definite");
  return {cholesky_solve(l, rhs), true};
}

bool rows_independent(std::span<const double> a1, std::span<const double> a2) {
  const double g11 = dot(a1, a1);
  const double g22 = dot(a2, a2);
  const double g12 = dot(a1, a2);
  const double det = g11 * g22 - g12 * g12;
  return det > 1e-12 * g11 * g22;
}

Vector min_norm_solution(const Matrix& a, std::span<const double> b) {
  if (a.rows() != 2 || b.size() != 2) throw ContractViolation("min_norm_solution: need a 2 x D system");
  if (a.cols() < 2) throw ContractViolation("min_norm_solution: need D >= 2");
  auto a1 = a.row(0);
  auto a2 = a.row(1);
  if (!rows_independent(a1, a2)) throw DegenerateSystem("min_norm_solution: dependent rows");

  // LQ factorisation by Gram-Schmidt on the two rows: A = L Q^T with Q
  // orthonormal, so x = Q L^{-1} b. Better conditioned than forming A A^T,
  // which matters for nearly parallel rows.
  const std::size_t d = a.cols();
  const double n1 = norm2(a1);
  Vector q1(a1.begin(), a1.end());
  for (double& v : q1) v /= n1;
  const double l21 = dot(a2, q1);
  Vector q2(a2.begin(), a2.end());
  for (std::size_t i = 0; i < d; ++i) q2[i] -= l21 * q1[i];
  // Second Gram-Schmidt pass restores orthogonality lost to cancellation.
  const double again = dot(q2, q1);
  for (std::size_t i = 0; i < d; ++i) q2[i] -= again * q1[i];
  const double l22 = norm2(q2);
  for (double& v : q2) v /= l22;

  auto solve = [&](double r1, double r2, Vector& x) {
    const double c1 = r1 / n1;
    const double c2 = (r2 - l21 * c1) / l22;
    for (std::size_t i = 0; i < d; ++i) x[i] += c1 * q1[i] + c2 * q2[i];
  };
  Vector x(d, 0.0);
  solve(b[0], b[1], x);
  // One step of iterative refinement on the residual.
  solve(b[0] - dot(a1, x), b[1] - dot(a2, x), x);
  return x;
}

Vector normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (!(n > 1e-12)) throw ZeroVector("normalize: vector norm " + std::to_string(n) + " too small");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

}  // namespace olrwa
