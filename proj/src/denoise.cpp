#include "quadrep/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadrep/errors.hpp"
#include "quadrep/linalg.hpp"
#include "quadrep/orthopoly.hpp"
#include "quadrep/random.hpp"

namespace quadrep {

namespace {

double to_ref(double x, double lo, double hi) { return (2.0 * x - (lo + hi)) / (hi - lo); }

std::vector<double> reference_positions(const NoisyDataset& d) {
  std::vector<double> t;
  t.reserve(d.positions.size());
  for (double x : d.positions) t.push_back(std::clamp(to_ref(x, d.x_min(), d.x_max()), -1.0, 1.0));
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// raw (b0, b1, c0, c1) from reference-coordinate coefficients
void to_raw(ManifoldFit4& fit) {
  const auto convert = [&](double v0, double v1, double& r0, double& r1) {
    PolyCoeffs p{Basis::legendre, {v0 * std::sqrt(2.0), v1 * std::sqrt(2.0 / 3.0)}, fit.x_min, fit.x_max};
    const PolyCoeffs m = basis_convert(p, Basis::monomial);
    r0 = m.coeffs[0];
    r1 = m.coeffs[1];
  };
  convert(fit.ref_b0, fit.ref_b1, fit.b0, fit.b1);
  convert(fit.ref_c0, fit.ref_c1, fit.c0, fit.c1);
}

const char* const kLsColumns[] = {"f", "x*f", "1", "x"};

std::size_t count_flips(std::span<const int> a, std::span<const int> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

void validate(const NoisyDataset& data) {
  if (data.positions.size() != data.observed.size())
    throw std::invalid_argument("dataset: positions/observed length mismatch");
  if (data.positions.size() < 2) throw std::invalid_argument("dataset: need at least 2 samples");
  for (std::size_t i = 0; i < data.positions.size(); ++i) {
    if (!std::isfinite(data.positions[i]) || !std::isfinite(data.observed[i]))
      throw DataError("dataset: non-finite value at row " + std::to_string(i));
    if (i > 0 && !(data.positions[i] > data.positions[i - 1]))
      throw std::invalid_argument("dataset: positions must be strictly increasing");
  }
}

std::vector<double> GroundTruth::values() const {
  std::vector<double> v;
  v.reserve(positions.size());
  for (double x : positions) v.push_back(eval_rep(manifold, x));
  return v;
}

GroundTruth step_ground_truth() {
  GroundTruth g;
  std::vector<int> signs;
  for (int i = 0; i <= 400; ++i) {
    g.positions.push_back(i);
    signs.push_back(i <= 140 ? -1 : 1);
  }
  g.manifold = compose_piecewise_manifold(PolyCoeffs{Basis::monomial, {25.0}, 0.0, 400.0},
                                          PolyCoeffs{Basis::monomial, {255.0}, 0.0, 400.0});
  g.manifold.index = IndexFunction::from_dense(g.positions, signs);
  return g;
}

GeneratedData generate_noisy(const GroundTruth& truth, const NoiseSpec& noise, std::uint64_t seed) {
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    throw std::invalid_argument("generate_noisy: sigma must be finite and >= 0");
  GeneratedData out;
  out.truth = truth.values();
  const std::size_t n = truth.positions.size();
  out.data.positions = truth.positions;
  out.data.noise_model = noise.target == NoiseTarget::function ? "function" : "manifold";
  out.data.sigma = noise.sigma;
  out.data.seed = seed;
  out.epsilon.assign(n, 0.0);
  if (noise.sigma == 0.0) {
    out.data.observed = out.truth;
    return out;
  }
  NormalStream normal(seed);
  out.data.observed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = noise.sigma * normal.next();
    out.epsilon[i] = eps;
    const double x = truth.positions[i];
    if (noise.target == NoiseTarget::function) {
      out.data.observed[i] = out.truth[i] + eps;
      continue;
    }
    const double a = truth.manifold.a(x), b = truth.manifold.b(x), c = truth.manifold.c(x) + eps;
    const double d = b * b + 4.0 * a * c;
    if (d < 0.0) {
      ++out.clamped;
      out.data.observed[i] = b / (2.0 * a);
      continue;
    }
    const double q = 0.5 * (b + std::copysign(std::sqrt(d), b));
    const double big = q / a, small = q != 0.0 ? -c / q : 0.0;
    const double plus = std::signbit(b) ? small : big, minus = std::signbit(b) ? big : small;
    out.data.observed[i] = truth.manifold.index.sign_at(x) > 0 ? plus : minus;
  }
  return out;
}

MomentSet compute_noisy_moments(const NoisyDataset& data) {
  validate(data);
  const std::vector<double> t = reference_positions(data);
  MomentSet m;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t[i], f = data.observed[i], f2 = f * f, f3 = f2 * f;
    m.S0 += 1.0;
    m.Sx += x;
    m.Sx2 += x * x;
    m.m_f += f;
    m.m_xf += x * f;
    m.m_x2f += x * x * f;
    m.m_f2 += f2;
    m.m_xf2 += x * f2;
    m.m_x2f2 += x * x * f2;
    m.m_f3 += f3;
    m.m_xf3 += x * f3;
  }
  return m;
}

MomentSet debias_moments(const MomentSet& noisy, double sigma2) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("debias_moments: sigma2 must be >= 0");
  MomentSet m = noisy;
  m.m_f2 = noisy.m_f2 - sigma2 * noisy.S0;
  m.m_xf2 = noisy.m_xf2 - sigma2 * noisy.Sx;
  m.m_x2f2 = noisy.m_x2f2 - sigma2 * noisy.Sx2;
  m.m_f3 = noisy.m_f3 - 3.0 * sigma2 * noisy.m_f;
  m.m_xf3 = noisy.m_xf3 - 3.0 * sigma2 * noisy.m_xf;
  return m;
}

Degree2Rep ManifoldFit4::manifold() const {
  Degree2Rep rep;
  rep.a = PolyCoeffs{Basis::monomial, {1.0}, x_min, x_max};
  rep.b = PolyCoeffs{Basis::monomial, {b0, b1}, x_min, x_max};
  rep.c = PolyCoeffs{Basis::monomial, {c0, c1}, x_min, x_max};
  rep.a_scale = 1.0;
  rep.provenance.method = method;
  return rep;
}

ManifoldFit4 fit_manifold_ls(const NoisyDataset& data) {
  validate(data);
  if (data.positions.size() < 4) throw std::invalid_argument("fit_manifold_ls: need at least 4 samples");
  const std::vector<double> t = reference_positions(data);
  const std::size_t n = t.size();
  Matrix v(n, 4);
  std::vector<double> y(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = data.observed[i];
    v(i, 0) = f;
    v(i, 1) = t[i] * f;
    v(i, 2) = 1.0;
    v(i, 3) = t[i];
    y[i] = f * f;
  }
  LsqResult res;
  try {
    res = weighted_lsq(v, y, w);
  } catch (const RankDeficientError& e) {
    std::string names;
    for (std::size_t j : e.dependent_columns()) names += std::string(names.empty() ? "" : ", ") + kLsColumns[j];
    throw RankDeficientError("fit_manifold_ls: design is rank-deficient (dependent column: " + names + ")",
                             e.rank(), e.dependent_columns());
  }
  ManifoldFit4 fit;
  fit.x_min = data.x_min();
  fit.x_max = data.x_max();
  fit.ref_b0 = res.coeffs[0];
  fit.ref_b1 = res.coeffs[1];
  fit.ref_c0 = res.coeffs[2];
  fit.ref_c1 = res.coeffs[3];
  fit.residual = res.residual_norm;
  fit.method = "ls";
  to_raw(fit);
  return fit;
}

ManifoldFit4 solve_moment_system(const MomentSet& m, double x_min, double x_max) {
  const double a[4][4] = {{m.m_f, m.m_xf, m.S0, m.Sx},
                          {m.m_xf, m.m_x2f, m.Sx, m.Sx2},
                          {m.m_f2, m.m_xf2, m.m_f, m.m_xf},
                          {m.m_xf2, m.m_x2f2, m.m_xf, m.m_x2f}};
  const double rhs[4] = {m.m_f2, m.m_xf2, m.m_f3, m.m_xf3};

  // equilibrate rows, then columns
  double rs[4], cs[4];
  for (int i = 0; i < 4; ++i) {
    double mx = 0.0;
    for (int j = 0; j < 4; ++j) mx = std::max(mx, std::abs(a[i][j]));
    rs[i] = mx > 0.0 ? 1.0 / mx : 1.0;
  }
  for (int j = 0; j < 4; ++j) {
    double mx = 0.0;
    for (int i = 0; i < 4; ++i) mx = std::max(mx, std::abs(rs[i] * a[i][j]));
    cs[j] = mx > 0.0 ? 1.0 / mx : 1.0;
  }
  Matrix b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = rs[i] * a[i][j] * cs[j];

  const PivotedQR qr = pivoted_qr(b);
  const auto solve = [&](std::span<const double> r) {
    std::vector<double> z(4, 0.0);
    for (std::size_t k = 0; k < 4; ++k) z[k] = dot(qr.q.col(k), r);
    const std::vector<double> y = solve_upper(qr.r, z, 4);
    std::vector<double> x(4);
    for (std::size_t k = 0; k < 4; ++k) x[qr.permutation[k]] = y[k];
    return x;
  };

  double cond = std::numeric_limits<double>::infinity();
  if (qr.diag_magnitudes[3] > 0.0) {
    double norm_b = 0.0, norm_inv = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) s += std::abs(b(i, j));
      norm_b = std::max(norm_b, s);
      std::vector<double> e(4, 0.0);
      e[j] = 1.0;
      const auto col = solve(e);
      double si = 0.0;
      for (double v : col) si += std::abs(v);
      norm_inv = std::max(norm_inv, si);
    }
    cond = norm_b * norm_inv;
  }
  if (!(cond <= 1e10)) {
    std::vector<std::size_t> dep;
    for (std::size_t k = 0; k < 4; ++k)
      if (qr.diag_magnitudes[k] < 1e-10 * qr.diag_magnitudes[0]) dep.push_back(qr.permutation[k]);
    throw SingularSystemError("solve_moment_system: system is singular or ill-conditioned (condition " +
                                  std::to_string(cond) + ")",
                              cond, std::move(dep));
  }

  std::vector<double> r(4);
  for (int i = 0; i < 4; ++i) r[i] = rs[i] * rhs[i];
  const std::vector<double> y = solve(r);
  ManifoldFit4 fit;
  fit.x_min = x_min;
  fit.x_max = x_max;
  fit.ref_b0 = y[0] * cs[0];
  fit.ref_b1 = y[1] * cs[1];
  fit.ref_c0 = y[2] * cs[2];
  fit.ref_c1 = y[3] * cs[3];
  fit.condition = cond;
  fit.method = "debias";
  to_raw(fit);
  return fit;
}

VoteResult knn_vote_index(std::span<const int> signs, std::span<const double> positions, std::size_t k,
                          std::size_t max_rounds) {
  const std::size_t n = signs.size();
  if (positions.size() != n) throw std::invalid_argument("knn_vote_index: length mismatch");
  if (k == 0 || k >= n) throw std::invalid_argument("knn_vote_index: need 1 <= k < sample count");
  for (int s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("knn_vote_index: signs must be +-1");

  std::vector<std::size_t> nbr(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t l = i, r = i + 1;  // next candidates are l-1 and r
    for (std::size_t c = 0; c < k; ++c) {
      const bool has_l = l > 0, has_r = r < n;
      bool take_left = has_l;
      if (has_l && has_r) take_left = positions[i] - positions[l - 1] <= positions[r] - positions[i];
      nbr[i * k + c] = take_left ? --l : r++;
    }
  }

  VoteResult out;
  out.dense.assign(signs.begin(), signs.end());
  std::vector<int> next(n);
  while (out.rounds < max_rounds) {
    ++out.rounds;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int sum = out.dense[i];
      for (std::size_t c = 0; c < k; ++c) sum += out.dense[nbr[i * k + c]];
      next[i] = sum > 0 ? 1 : sum < 0 ? -1 : out.dense[i];
      changed = changed || next[i] != out.dense[i];
    }
    out.dense.swap(next);
    if (!changed) {
      out.converged = true;
      break;
    }
  }
  out.index = IndexFunction::from_dense(positions, out.dense);
  return out;
}

std::vector<double> reconstruct(const ManifoldFit4& fit, std::span<const double> positions,
                                std::span<const int> signs) {
  const Degree2Rep rep = fit.manifold();
  std::vector<double> v(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    try {
      const RootPair r = roots_at(rep, positions[i]);
      v[i] = signs[i] > 0 ? r.plus : r.minus;
    } catch (const ComplexRootError& e) {
      throw ComplexRootError(std::string("reconstruct: fitted manifold has no real root (") + e.what() + ")",
                             e.discriminant());
    }
  }
  return v;
}

namespace {

Reconstruction finish(const NoisyDataset& data, ManifoldFit4 fit, std::size_t k,
                      std::span<const double> index_target) {
  Reconstruction out;
  out.fit = std::move(fit);
  const Degree2Rep rep = out.fit.manifold();
  out.nearest = assign_index(rep, data.positions, index_target).dense;
  if (k > 0) {
    out.vote = knn_vote_index(out.nearest, data.positions, k);
  } else {
    out.vote.dense = out.nearest;
    out.vote.index = IndexFunction::from_dense(data.positions, out.nearest);
    out.vote.converged = true;
  }
  out.values = reconstruct(out.fit, data.positions, out.vote.dense);
  out.noise_estimate.resize(out.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) out.noise_estimate[i] = data.observed[i] - out.values[i];
  return out;
}

}  // namespace

Reconstruction denoise_ls(const NoisyDataset& data, std::size_t k) {
  return finish(data, fit_manifold_ls(data), k, data.observed);
}

Reconstruction denoise_case3(const NoisyDataset& data, double sigma2, std::size_t k) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("denoise_case3: sigma2 must be > 0");
  const MomentSet m = debias_moments(compute_noisy_moments(data), sigma2);
  return finish(data, solve_moment_system(m, data.x_min(), data.x_max()), k, data.observed);
}

std::string to_string(ConstraintKind c) {
  switch (c) {
    case ConstraintKind::one: return "1";
    case ConstraintKind::x: return "x";
    case ConstraintKind::x2: return "x2";
    case ConstraintKind::f: return "f";
    case ConstraintKind::xf: return "xf";
    case ConstraintKind::x2f: return "x2f";
    case ConstraintKind::f2: return "f2";
    case ConstraintKind::xf2: return "xf2";
  }
  return "?";
}

ConstraintKind constraint_from_string(const std::string& name) {
  for (ConstraintKind c : all_constraints())
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown constraint '" + name + "'");
}

std::vector<ConstraintKind> all_constraints() {
  return {ConstraintKind::one, ConstraintKind::x,  ConstraintKind::x2, ConstraintKind::f,
          ConstraintKind::xf,  ConstraintKind::x2f, ConstraintKind::f2, ConstraintKind::xf2};
}

NoiseConstraintSet build_constraints(std::span<const ConstraintKind> kinds, std::span<const double> t,
                                     std::span<const double> f) {
  if (t.size() != f.size()) throw std::invalid_argument("build_constraints: length mismatch");
  NoiseConstraintSet set;
  for (ConstraintKind kind : kinds) {
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = t[i], v = f[i];
      switch (kind) {
        case ConstraintKind::one: g[i] = 1.0; break;
        case ConstraintKind::x: g[i] = x; break;
        case ConstraintKind::x2: g[i] = x * x; break;
        case ConstraintKind::f: g[i] = v; break;
        case ConstraintKind::xf: g[i] = x * v; break;
        case ConstraintKind::x2f: g[i] = x * x * v; break;
        case ConstraintKind::f2: g[i] = v * v; break;
        case ConstraintKind::xf2: g[i] = x * v * v; break;
      }
    }
    const double nrm = norm2(g);
    if (nrm > 0.0)
      for (double& e : g) e /= nrm;
    set.kinds.push_back(kind);
    set.vectors.push_back(std::move(g));
  }
  return set;
}

Projection project_noise(std::span<const double> residual, const NoiseConstraintSet& constraints,
                         std::span<const double> t, bool reduce_dependent) {
  const std::size_t n = residual.size(), kc = constraints.vectors.size();
  if (t.size() != n) throw std::invalid_argument("project_noise: length mismatch");
  if (kc == 0) throw std::invalid_argument("project_noise: no constraints");
  if (kc > n) throw std::invalid_argument("project_noise: more constraints than samples");

  Matrix g(n, 0);
  for (const auto& v : constraints.vectors) {
    if (v.size() != n) throw std::invalid_argument("project_noise: constraint length mismatch");
    g.append_column(v);
  }
  const PivotedQR gq = pivoted_qr(g);
  const std::size_t rank = gq.numerical_rank(1e-10);
  Projection out;
  if (rank < kc) {
    std::vector<std::size_t> dep(gq.permutation.begin() + static_cast<std::ptrdiff_t>(rank), gq.permutation.end());
    std::sort(dep.begin(), dep.end());
    if (!reduce_dependent) {
      std::string names;
      for (std::size_t j : dep) names += std::string(names.empty() ? "" : ", ") + to_string(constraints.kinds[j]);
      throw SingularSystemError("project_noise: dependent constraints: " + names,
                                gq.diag_magnitudes[0] / std::max(gq.diag_magnitudes[rank], 1e-300), dep);
    }
    out.used.assign(gq.permutation.begin(), gq.permutation.begin() + static_cast<std::ptrdiff_t>(rank));
    std::sort(out.used.begin(), out.used.end());
  } else {
    for (std::size_t j = 0; j < kc; ++j) out.used.push_back(j);
  }
  const std::size_t k = out.used.size();

  Matrix modes(n, k);
  std::vector<double> row(k);
  for (std::size_t i = 0; i < n; ++i) {
    legendre_row(t[i], row);
    for (std::size_t m = 0; m < k; ++m) modes(i, m) = row[m];
  }
  Matrix sys(k, k);
  std::vector<double> h(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& gj = constraints.vectors[out.used[j]];
    h[j] = dot(gj, residual);
    for (std::size_t m = 0; m < k; ++m) sys(j, m) = dot(gj, modes.col(m));
  }
  const PivotedQR sq = pivoted_qr(sys);
  if (sq.numerical_rank(1e-12) < k)
    throw SingularSystemError("project_noise: constraint/mode system is singular",
                              sq.diag_magnitudes[0] / std::max(sq.diag_magnitudes[k - 1], 1e-300));
  std::vector<double> z(k);
  for (std::size_t j = 0; j < k; ++j) z[j] = dot(sq.q.col(j), h);
  const std::vector<double> y = solve_upper(sq.r, z, k);
  out.coefficients.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) out.coefficients[sq.permutation[j]] = y[j];

  out.corrected.assign(residual.begin(), residual.end());
  for (std::size_t m = 0; m < k; ++m) {
    const auto col = modes.col(m);
    for (std::size_t i = 0; i < n; ++i) out.corrected[i] -= out.coefficients[m] * col[i];
  }
  const double scale = norm2(residual);
  double worst = 0.0;
  for (const auto& gj : constraints.vectors) {
    out.constraint_residuals.push_back(dot(gj, out.corrected));
    worst = std::max(worst, std::abs(out.constraint_residuals.back()));
  }
  if (worst > 1e-9 * scale)
    throw NumericalError("project_noise: constraint residual " + std::to_string(worst) +
                         " exceeds 1e-9 * ||residual||");
  return out;
}

IterativeResult denoise_iterative(const NoisyDataset& data, const IterativeConfig& config) {
  validate(data);
  if (config.max_iter < 1) throw std::invalid_argument("denoise_iterative: max_iter must be >= 1");
  if (config.constraints.empty()) throw std::invalid_argument("denoise_iterative: no constraints");

  IterativeResult out;
  switch (config.init) {
    case InitMode::case1:
    case InitMode::case2: out.initial = denoise_ls(data, config.k); break;
    case InitMode::case3: out.initial = denoise_case3(data, config.init_sigma2, config.k); break;
  }
  const std::vector<double> t = reference_positions(data);
  Reconstruction cur = out.initial;

  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    std::vector<double> eps(data.observed.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = data.observed[i] - cur.values[i];
    const NoiseConstraintSet cons = build_constraints(config.constraints, t, cur.values);
    const Projection proj = project_noise(eps, cons, t, true);

    NoisyDataset improved = data;
    for (std::size_t i = 0; i < eps.size(); ++i) improved.observed[i] = data.observed[i] - proj.corrected[i];
    Reconstruction next;
    try {
      ManifoldFit4 fit = fit_manifold_ls(improved);
      fit.method = "iterative";
      next = finish(data, fit, config.k, improved.observed);
    } catch (const NumericalError& e) {
      // keep the last real-valued iterate
      out.stop_reason = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }

    const double old_c[4] = {cur.fit.ref_b0, cur.fit.ref_b1, cur.fit.ref_c0, cur.fit.ref_c1};
    const double new_c[4] = {next.fit.ref_b0, next.fit.ref_b1, next.fit.ref_c0, next.fit.ref_c1};
    double diff = 0.0, size = 0.0;
    for (int j = 0; j < 4; ++j) {
      diff = std::max(diff, std::abs(new_c[j] - old_c[j]));
      size = std::max(size, std::abs(new_c[j]));
    }
    IterationRecord rec;
    rec.iteration = it;
    rec.ref_b0 = new_c[0];
    rec.ref_b1 = new_c[1];
    rec.ref_c0 = new_c[2];
    rec.ref_c1 = new_c[3];
    rec.max_rel_change = size > 0.0 ? diff / size : diff;
    rec.index_flips = count_flips(cur.vote.dense, next.vote.dense);
    rec.constraints_used = proj.used.size();
    double worst = 0.0;
    for (double r : proj.constraint_residuals) worst = std::max(worst, std::abs(r));
    const double en = norm2(eps);
    rec.max_constraint_residual = en > 0.0 ? worst / en : worst;
    out.trace.push_back(rec);
    cur = std::move(next);
    if (rec.max_rel_change < config.tol && rec.index_flips == 0) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && out.stop_reason.empty()) out.stop_reason = "max_iter reached";
  out.final = std::move(cur);
  return out;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rmse: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace quadrep
