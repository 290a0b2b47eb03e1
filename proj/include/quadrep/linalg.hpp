#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace quadrep {

// Dense column-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> data() const noexcept { return data_; }

  // Appends a column of length rows() (or sets rows() when the matrix is empty).
  void append_column(std::span<const double> column);

  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> multiply(const Matrix& a, std::span<const double> x);

// A * Pi = Q * R with Householder reflections and greedy column pivoting on
// the remaining column norms. Ties go to the lowest original column index.
struct PivotedQR {
  Matrix q;                            // rows x k, orthonormal columns, k = min(rows, cols)
  Matrix r;                            // k x cols, upper triangular
  std::vector<std::size_t> permutation;  // position j holds original column index
  std::vector<double> diag_magnitudes;   // |R_jj|

  // Count of leading |R_jj| >= rel_tol * |R_00|. Zero for a zero matrix.
  std::size_t numerical_rank(double rel_tol = 1e-12) const;
};

PivotedQR pivoted_qr(const Matrix& a);

struct LsqOptions {
  double rank_tol = 1e-12;  // relative to |R_00|
  // Optional positive per-column scaling applied before factorization
  // (experimental; empty means all ones).
  std::vector<double> column_scale;
};

struct LsqResult {
  std::vector<double> coeffs;
  double residual_norm = 0.0;  // ||W^{1/2}(V eta - y)||_2
  std::size_t rank = 0;
  std::vector<std::size_t> dropped;  // columns excluded as dependent (basic solve only)
};

// min ||W^{1/2}(V eta - y)||_2 via QR of W^{1/2} V. Throws RankDeficientError
// when some |R_kk| < rank_tol * |R_00|.
LsqResult weighted_lsq(const Matrix& v, std::span<const double> y, std::span<const double> w,
                       const LsqOptions& options = {});

// Same problem, but dependent columns are dropped (coefficient zero) and the
// fit is made on the numerically independent pivot subset.
LsqResult weighted_lsq_basic(const Matrix& v, std::span<const double> y,
                             std::span<const double> w, const LsqOptions& options = {});

// Solves an upper-triangular system R x = b using the leading n x n block.
std::vector<double> solve_upper(const Matrix& r, std::span<const double> b, std::size_t n);

// Column-by-column QR (reorthogonalized Gram-Schmidt) that also tracks the
// least-squares residual of a fixed target. Single owner while being built.
class IncrementalQR {
 public:
  enum class Append { appended, dependent };

  IncrementalQR(std::span<const double> target, double dependence_tol = 1e-13);

  // Appends col unless its projection residual is < dependence_tol * ||col||;
  // in that case the factorization is left untouched.
  Append append_column(std::span<const double> col);

  // Residual after tentatively appending every column of block, without
  // modifying *this. nullopt if any column of the block is dependent.
  std::optional<double> trial_residual(const Matrix& block) const;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return q_.cols(); }
  const Matrix& q() const noexcept { return q_; }
  Matrix r() const;

  std::vector<double> solve() const;  // LS coefficients for the target
  double residual_norm() const;

 private:
  // Orthogonalizes v against q_ (twice) and extra; returns coefficients.
  std::vector<double> orthogonalize(std::span<double> v, const Matrix* extra) const;

  std::size_t rows_;
  double dependence_tol_;
  Matrix q_;
  std::vector<std::vector<double>> r_cols_;
  std::vector<double> qt_target_;
  std::vector<double> residual_;
};

double norm2(std::span<const double> v);

}  // namespace quadrep
