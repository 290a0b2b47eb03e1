#include "quadrep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "quadrep/errors.hpp"

namespace quadrep {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::append_column(std::span<const double> column) {
  if (cols_ == 0 && rows_ == 0) rows_ = column.size();
  if (column.size() != rows_) throw std::invalid_argument("append_column: length mismatch");
  data_.insert(data_.end(), column.begin(), column.end());
  ++cols_;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw std::invalid_argument("multiply: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const auto c = a.col(j);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += c[i] * x[j];
  }
  return y;
}

double norm2(std::span<const double> v) {
  // scaled to avoid overflow for the large raw-coordinate moments
  double scale = 0.0, ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// In-place Householder QR with column pivoting. The reflectors live below
// the diagonal of `work` (v normalized so that v[0] is stored separately).
struct Householder {
  Matrix work;
  std::vector<std::vector<double>> reflectors;  // unit vectors of length rows-j
  std::vector<std::size_t> perm;
  std::vector<double> rdiag;

  explicit Householder(Matrix a) : work(std::move(a)) {
    const std::size_t m = work.rows(), n = work.cols();
    const std::size_t k = std::min(m, n);
    perm.resize(n);
    for (std::size_t j = 0; j < n; ++j) perm[j] = j;
    reflectors.reserve(k);
    rdiag.reserve(k);

    for (std::size_t j = 0; j < k; ++j) {
      std::size_t best = j;
      double best_norm = -1.0;
      for (std::size_t c = j; c < n; ++c) {
        const double nc = norm2(work.col(c).subspan(j));
        if (nc > best_norm || (nc == best_norm && perm[c] < perm[best])) {
          best_norm = nc;
          best = c;
        }
      }
      if (best != j) {
        auto a = work.col(j), b = work.col(best);
        std::swap_ranges(a.begin(), a.end(), b.begin());
        std::swap(perm[j], perm[best]);
      }

      auto x = work.col(j).subspan(j);
      const double alpha = norm2(x);
      std::vector<double> v(x.begin(), x.end());
      if (alpha == 0.0) {
        reflectors.emplace_back();  // identity
        rdiag.push_back(0.0);
        continue;
      }
      const double beta = x[0] >= 0.0 ? -alpha : alpha;
      v[0] -= beta;
      const double vn = norm2(v);
      for (double& e : v) e /= vn;

      for (std::size_t c = j; c < n; ++c) {
        auto col = work.col(c).subspan(j);
        const double s = 2.0 * dot(v, col);
        for (std::size_t i = 0; i < col.size(); ++i) col[i] -= s * v[i];
      }
      // clean the subdiagonal so R is exactly triangular
      auto cj = work.col(j);
      cj[j] = beta;
      for (std::size_t i = j + 1; i < m; ++i) cj[i] = 0.0;
      reflectors.push_back(std::move(v));
      rdiag.push_back(beta);
    }
  }

  void apply_qt(std::span<double> b) const {
    for (std::size_t j = 0; j < reflectors.size(); ++j) {
      const auto& v = reflectors[j];
      if (v.empty()) continue;
      auto seg = b.subspan(j);
      const double s = 2.0 * dot(v, seg);
      for (std::size_t i = 0; i < v.size(); ++i) seg[i] -= s * v[i];
    }
  }

  void apply_q(std::span<double> b) const {
    for (std::size_t j = reflectors.size(); j-- > 0;) {
      const auto& v = reflectors[j];
      if (v.empty()) continue;
      auto seg = b.subspan(j);
      const double s = 2.0 * dot(v, seg);
      for (std::size_t i = 0; i < v.size(); ++i) seg[i] -= s * v[i];
    }
  }

  std::size_t rank(double rel_tol) const {
    if (rdiag.empty() || rdiag[0] == 0.0) return 0;
    const double ref = std::abs(rdiag[0]);
    std::size_t r = 0;
    while (r < rdiag.size() && std::abs(rdiag[r]) >= rel_tol * ref) ++r;
    return r;
  }
};

Matrix weighted_design(const Matrix& v, std::span<const double> w, const LsqOptions& opt) {
  if (w.size() != v.rows()) throw std::invalid_argument("weighted_lsq: weight length mismatch");
  if (!opt.column_scale.empty() && opt.column_scale.size() != v.cols())
    throw std::invalid_argument("weighted_lsq: column_scale length mismatch");
  Matrix a(v.rows(), v.cols());
  for (std::size_t j = 0; j < v.cols(); ++j) {
    const double s = opt.column_scale.empty() ? 1.0 : opt.column_scale[j];
    if (!(s > 0.0)) throw std::invalid_argument("weighted_lsq: column scale must be positive");
    for (std::size_t i = 0; i < v.rows(); ++i) a(i, j) = std::sqrt(w[i]) * v(i, j) * s;
  }
  return a;
}

void check_lsq_inputs(const Matrix& v, std::span<const double> y, std::span<const double> w) {
  if (y.size() != v.rows()) throw std::invalid_argument("weighted_lsq: target length mismatch");
  if (v.cols() == 0) throw std::invalid_argument("weighted_lsq: no columns");
  if (v.rows() < v.cols()) throw std::invalid_argument("weighted_lsq: more columns than rows");
  for (double wi : w)
    if (!(wi > 0.0)) throw std::invalid_argument("weighted_lsq: weights must be positive");
}

LsqResult solve_with(const Householder& h, const Matrix& v, std::span<const double> y,
                     std::span<const double> w, const LsqOptions& opt, std::size_t r) {
  std::vector<double> b(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) b[i] = std::sqrt(w[i]) * y[i];
  h.apply_qt(b);

  const std::vector<double> z = solve_upper(h.work, b, r);
  LsqResult out;
  out.coeffs.assign(v.cols(), 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    const std::size_t orig = h.perm[j];
    const double s = opt.column_scale.empty() ? 1.0 : opt.column_scale[orig];
    out.coeffs[orig] = z[j] * s;
  }
  out.residual_norm = norm2(std::span<const double>(b).subspan(r));
  out.rank = r;
  for (std::size_t j = r; j < v.cols(); ++j) out.dropped.push_back(h.perm[j]);
  std::sort(out.dropped.begin(), out.dropped.end());
  return out;
}

}  // namespace

std::vector<double> solve_upper(const Matrix& r, std::span<const double> b, std::size_t n) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= r(i, j) * x[j];
    x[i] = s / r(i, i);
  }
  return x;
}

std::size_t PivotedQR::numerical_rank(double rel_tol) const {
  if (diag_magnitudes.empty() || diag_magnitudes[0] == 0.0) return 0;
  std::size_t r = 0;
  while (r < diag_magnitudes.size() && diag_magnitudes[r] >= rel_tol * diag_magnitudes[0]) ++r;
  return r;
}

PivotedQR pivoted_qr(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("pivoted_qr: empty matrix");
  const Householder h(a);
  const std::size_t m = a.rows(), n = a.cols(), k = std::min(m, n);

  PivotedQR out;
  out.permutation = h.perm;
  out.r = Matrix(k, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= std::min(j, k - 1); ++i) out.r(i, j) = h.work(i, j);
  out.q = Matrix(m, k);
  for (std::size_t j = 0; j < k; ++j) {
    auto c = out.q.col(j);
    c[j] = 1.0;
    h.apply_q(c);
  }
  for (double d : h.rdiag) out.diag_magnitudes.push_back(std::abs(d));
  return out;
}

LsqResult weighted_lsq(const Matrix& v, std::span<const double> y, std::span<const double> w,
                       const LsqOptions& options) {
  check_lsq_inputs(v, y, w);
  const Householder h(weighted_design(v, w, options));
  const std::size_t r = h.rank(options.rank_tol);
  if (r < v.cols()) {
    std::vector<std::size_t> dep(h.perm.begin() + static_cast<std::ptrdiff_t>(r), h.perm.end());
    std::sort(dep.begin(), dep.end());
    throw RankDeficientError("weighted_lsq: rank-deficient design (rank " + std::to_string(r) +
                                 " of " + std::to_string(v.cols()) + ")",
                             r, std::move(dep));
  }
  return solve_with(h, v, y, w, options, r);
}

LsqResult weighted_lsq_basic(const Matrix& v, std::span<const double> y,
                             std::span<const double> w, const LsqOptions& options) {
  check_lsq_inputs(v, y, w);
  const Householder h(weighted_design(v, w, options));
  const std::size_t r = h.rank(options.rank_tol);
  if (r == 0) throw RankDeficientError("weighted_lsq_basic: zero design", 0);
  return solve_with(h, v, y, w, options, r);
}

IncrementalQR::IncrementalQR(std::span<const double> target, double dependence_tol)
    : rows_(target.size()),
      dependence_tol_(dependence_tol),
      residual_(target.begin(), target.end()) {}

std::vector<double> IncrementalQR::orthogonalize(std::span<double> v, const Matrix* extra) const {
  const std::size_t k = q_.cols();
  const std::size_t e = extra ? extra->cols() : 0;
  std::vector<double> coef(k + e, 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < k + e; ++j) {
      const auto qj = j < k ? q_.col(j) : extra->col(j - k);
      const double s = dot(qj, v);
      for (std::size_t i = 0; i < rows_; ++i) v[i] -= s * qj[i];
      coef[j] += s;
    }
  }
  return coef;
}

IncrementalQR::Append IncrementalQR::append_column(std::span<const double> col) {
  if (col.size() != rows_) throw std::invalid_argument("append_column: length mismatch");
  const double cn = norm2(col);
  std::vector<double> v(col.begin(), col.end());
  std::vector<double> coef = orthogonalize(v, nullptr);
  const double rho = norm2(v);
  if (cn == 0.0 || rho < dependence_tol_ * cn) return Append::dependent;
  for (double& e : v) e /= rho;
  coef.push_back(rho);

  const double z = dot(v, residual_);
  for (std::size_t i = 0; i < rows_; ++i) residual_[i] -= z * v[i];
  q_.append_column(v);
  r_cols_.push_back(std::move(coef));
  qt_target_.push_back(z);
  return Append::appended;
}

std::optional<double> IncrementalQR::trial_residual(const Matrix& block) const {
  if (block.cols() > 0 && block.rows() != rows_)
    throw std::invalid_argument("trial_residual: length mismatch");
  Matrix extra(rows_, 0);
  std::vector<double> res = residual_;
  for (std::size_t j = 0; j < block.cols(); ++j) {
    const auto col = block.col(j);
    const double cn = norm2(col);
    std::vector<double> v(col.begin(), col.end());
    orthogonalize(v, &extra);
    const double rho = norm2(v);
    if (cn == 0.0 || rho < dependence_tol_ * cn) return std::nullopt;
    for (double& e : v) e /= rho;
    const double z = dot(v, res);
    for (std::size_t i = 0; i < rows_; ++i) res[i] -= z * v[i];
    extra.append_column(v);
  }
  return norm2(res);
}

Matrix IncrementalQR::r() const {
  const std::size_t k = r_cols_.size();
  Matrix out(k, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i <= j; ++i) out(i, j) = r_cols_[j][i];
  return out;
}

std::vector<double> IncrementalQR::solve() const { return solve_upper(r(), qt_target_, cols()); }

double IncrementalQR::residual_norm() const { return norm2(residual_); }

}  // namespace quadrep
