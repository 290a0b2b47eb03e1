#include "quadrep/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadrep/errors.hpp"
#include "quadrep/linalg.hpp"
#include "quadrep/orthopoly.hpp"

namespace quadrep {

namespace {

const double kL0 = std::sqrt(0.5);

double reference_coordinate(double x, double x_min, double x_max) {
  const double t = (2.0 * x - (x_min + x_max)) / (x_max - x_min);
  if (!(std::abs(t) <= 1.0 + 1e-12))
    throw std::domain_error("evaluation point " + std::to_string(x) + " outside [" +
                            std::to_string(x_min) + ", " + std::to_string(x_max) + "]");
  return std::clamp(t, -1.0, 1.0);
}

double legendre_series(std::span<const double> c, double t) {
  if (c.empty()) return 0.0;
  std::vector<double> row(c.size());
  legendre_row(t, row);
  double s = 0.0;
  for (std::size_t n = 0; n < c.size(); ++n) s += c[n] * row[n];
  return s;
}

using LPoly = std::vector<long double>;

// (p * q) for monomial coefficient arrays
LPoly poly_mul(const LPoly& p, const LPoly& q) {
  if (p.empty() || q.empty()) return {};
  LPoly r(p.size() + q.size() - 1, 0.0L);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

// p(alpha * s + beta) as a polynomial in s
LPoly compose_affine(const LPoly& p, long double alpha, long double beta) {
  LPoly out;
  const LPoly lin = {beta, alpha};
  for (std::size_t k = p.size(); k-- > 0;) {
    out = poly_mul(out, lin);
    if (out.empty()) out.push_back(0.0L);
    out[0] += p[k];
  }
  return out;
}

LPoly legendre_to_monomial_t(std::span<const double> c) {
  LPoly acc(c.size(), 0.0L);
  LPoly p0 = {1.0L}, p1 = {0.0L, 1.0L};
  for (std::size_t n = 0; n < c.size(); ++n) {
    const LPoly& pn = n == 0 ? p0 : p1;
    const long double s = std::sqrt((2.0L * n + 1.0L) / 2.0L);
    for (std::size_t k = 0; k < pn.size(); ++k) acc[k] += c[n] * s * pn[k];
    if (n >= 1) {
      // P_{n+1} = ((2n+1) t P_n - n P_{n-1}) / (n+1)
      LPoly next(n + 2, 0.0L);
      for (std::size_t k = 0; k < p1.size(); ++k) next[k + 1] += (2.0L * n + 1.0L) * p1[k];
      for (std::size_t k = 0; k < p0.size(); ++k) next[k] -= n * p0[k];
      for (auto& v : next) v /= (n + 1.0L);
      p0 = std::move(p1);
      p1 = std::move(next);
    }
  }
  return acc;
}

std::vector<double> monomial_t_to_legendre(const LPoly& p) {
  const std::size_t n = p.size();
  if (n == 0) return {};
  const QuadratureRule rule = gauss_legendre(n);
  std::vector<double> out(n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long double t = rule.nodes[i];
    long double v = 0.0L;
    for (std::size_t k = n; k-- > 0;) v = v * t + p[k];
    legendre_row(rule.nodes[i], row);
    for (std::size_t j = 0; j < n; ++j) out[j] += static_cast<double>(rule.weights[i] * v * row[j]);
  }
  return out;
}

void check_same_domain(const PolyCoeffs& p, const PolyCoeffs& q) {
  if (p.x_min != q.x_min || p.x_max != q.x_max)
    throw std::invalid_argument("polynomials live on different domains");
}

// Legendre product of two series by exact projection.
std::vector<double> legendre_product(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) return {};
  const std::size_t deg = (p.size() - 1) + (q.size() - 1);
  const QuadratureRule rule = gauss_legendre(deg + 1);
  std::vector<double> out(deg + 1, 0.0), row(deg + 1);
  for (std::size_t i = 0; i < rule.order(); ++i) {
    const double t = rule.nodes[i];
    const double v = legendre_series(p, t) * legendre_series(q, t);
    legendre_row(t, row);
    for (std::size_t n = 0; n <= deg; ++n) out[n] += rule.weights[i] * v * row[n];
  }
  return out;
}

std::vector<double> padded_sum(std::span<const double> p, std::span<const double> q) {
  std::vector<double> out(std::max(p.size(), q.size()), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
  for (std::size_t i = 0; i < q.size(); ++i) out[i] += q[i];
  return out;
}

}  // namespace

double PolyCoeffs::operator()(double x) const {
  const double t = reference_coordinate(x, x_min, x_max);
  if (basis == Basis::legendre) return legendre_series(coeffs, t);
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
  return v;
}

PolyCoeffs basis_convert(const PolyCoeffs& p, Basis target) {
  if (p.basis == target) return p;
  if (p.degree() > 60) throw std::invalid_argument("basis_convert: degree above 60");
  PolyCoeffs out = p;
  out.basis = target;
  const long double lo = p.x_min, hi = p.x_max;
  if (target == Basis::monomial) {
    // t = alpha x + beta
    const LPoly in_t = legendre_to_monomial_t(p.coeffs);
    const LPoly in_x = compose_affine(in_t, 2.0L / (hi - lo), -(lo + hi) / (hi - lo));
    out.coeffs.assign(in_x.begin(), in_x.end());
    out.coeffs.resize(p.coeffs.size(), 0.0);
  } else {
    // x = h t + m
    const LPoly in_x(p.coeffs.begin(), p.coeffs.end());
    const LPoly in_t = compose_affine(in_x, (hi - lo) / 2.0L, (hi + lo) / 2.0L);
    out.coeffs = monomial_t_to_legendre(in_t);
    out.coeffs.resize(p.coeffs.size(), 0.0);
  }
  return out;
}

double constant_part(const PolyCoeffs& p) {
  if (p.coeffs.empty()) return 0.0;
  return p.basis == Basis::legendre ? p.coeffs[0] * kL0 : p.coeffs[0];
}

double Degree1Rep::denominator_at(double x) const {
  const double t = reference_coordinate(x, numerator.x_min, numerator.x_max);
  std::vector<double> row(denominator_tail.size() + 1);
  legendre_row(t, row);
  double s = 0.0;
  for (std::size_t n = 0; n < denominator_tail.size(); ++n) s += denominator_tail[n] * row[n + 1];
  return 1.0 - s;
}

PolyCoeffs Degree1Rep::denominator() const {
  PolyCoeffs d;
  d.basis = Basis::legendre;
  d.x_min = numerator.x_min;
  d.x_max = numerator.x_max;
  d.coeffs.push_back(1.0 / kL0);
  for (double b : denominator_tail) d.coeffs.push_back(-b);
  return d;
}

int IndexFunction::sign_at(double x) const {
  const auto k = std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
  return (k % 2 == 0) ? first_sign : -first_sign;
}

IndexFunction IndexFunction::from_dense(std::span<const double> positions,
                                        std::span<const int> signs) {
  if (positions.size() != signs.size())
    throw std::invalid_argument("IndexFunction: positions/signs length mismatch");
  IndexFunction out;
  if (signs.empty()) return out;
  for (int s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("IndexFunction: signs must be +-1");
  out.first_sign = signs[0];
  for (std::size_t i = 1; i < signs.size(); ++i) {
    if (!(positions[i] > positions[i - 1]))
      throw std::invalid_argument("IndexFunction: positions must be strictly increasing");
    if (signs[i] != signs[i - 1]) out.breakpoints.push_back(0.5 * (positions[i - 1] + positions[i]));
  }
  return out;
}

std::vector<int> IndexFunction::to_dense(std::span<const double> positions) const {
  std::vector<int> out;
  out.reserve(positions.size());
  for (double x : positions) out.push_back(sign_at(x));
  return out;
}

RootPair roots_at(const Degree2Rep& rep, double x) {
  const double a = rep.a(x), b = rep.b(x), c = rep.c(x);
  RootPair r;
  r.discriminant = b * b + 4.0 * a * c;

  if (std::abs(a) < kLinearThreshold * rep.a_scale || a == 0.0) {
    if (b == 0.0) throw PoleError("roots_at: a and b both vanish", x);
    const double root = -c / b;
    r.lo = r.hi = r.plus = r.minus = root;
    r.linear = true;
    return r;
  }

  double d = r.discriminant;
  const double tol = 1e-8 * (b * b + 4.0 * std::abs(a * c) + 1.0);
  if (d < -tol) throw ComplexRootError("roots_at: complex roots at x = " + std::to_string(x), d);
  if (d < 0.0) {
    d = 0.0;
    r.clamped = true;
  }
  const double s = std::sqrt(d);
  const double q = 0.5 * (b + std::copysign(s, b));
  double big, small;
  if (q == 0.0) {
    big = small = 0.0;  // b = 0 and d = 0
  } else {
    big = q / a;
    small = -c / q;
  }
  // the +1 branch is (b + sqrt(D)) / (2a), which is `big` exactly when b >= 0
  if (std::signbit(b)) {
    r.plus = small;
    r.minus = big;
  } else {
    r.plus = big;
    r.minus = small;
  }
  r.lo = std::min(big, small);
  r.hi = std::max(big, small);
  return r;
}

IndexAssignment assign_index(const Degree2Rep& rep, std::span<const double> positions,
                             std::span<const double> values) {
  if (positions.size() != values.size())
    throw std::invalid_argument("assign_index: positions/values length mismatch");
  IndexAssignment out;
  out.dense.assign(positions.size(), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    try {
      const RootPair r = roots_at(rep, positions[i]);
      out.dense[i] = std::abs(r.plus - values[i]) <= std::abs(r.minus - values[i]) ? 1 : -1;
    } catch (const ComplexRootError&) {
      out.undefined.push_back(i);
    }
  }
  // undefined nodes inherit a neighbouring sign so the compressed form stays valid
  int carry = 0;
  for (int s : out.dense)
    if (s != 0) {
      carry = s;
      break;
    }
  if (carry == 0) carry = 1;
  for (int& s : out.dense) {
    if (s == 0) s = carry;
    carry = s;
  }
  out.index = IndexFunction::from_dense(positions, out.dense);
  return out;
}

IndexAssignment assign_index(const Degree2Rep& rep, const SampleGrid& grid) {
  return assign_index(rep, grid.mapped, grid.values);
}

double eval_rep(const Degree0Rep& rep, double x) { return rep.coeffs(x); }

double eval_rep(const Degree1Rep& rep, double x) {
  const double den = rep.denominator_at(x);
  if (!(std::abs(den) > kPoleThreshold)) throw PoleError("eval_rep: pole of c/b", x);
  return rep.numerator(x) / den;
}

double eval_rep(const Degree2Rep& rep, double x) {
  const RootPair r = roots_at(rep, x);
  return rep.index.sign_at(x) > 0 ? r.plus : r.minus;
}

double eval_rep(const Representation& rep, double x) {
  return std::visit([x](const auto& r) { return eval_rep(r, x); }, rep);
}

std::vector<double> eval_rep(const Representation& rep, std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(eval_rep(rep, x));
  return out;
}

Degree0Rep fit_degree0(const SampleGrid& grid, std::size_t n) {
  const std::size_t m = grid.size();
  if (n + 1 > m) throw std::invalid_argument("fit_degree0: N+1 exceeds the grid size");
  Degree0Rep rep;
  rep.coeffs.basis = Basis::legendre;
  rep.coeffs.x_min = grid.x_min;
  rep.coeffs.x_max = grid.x_max;
  if (grid.quadrature_exact() && 2 * n <= 2 * m - 1) {
    rep.coeffs.coeffs.assign(n + 1, 0.0);
    std::vector<double> row(n + 1);
    for (std::size_t i = 0; i < m; ++i) {
      legendre_row(grid.nodes[i], row);
      const double wf = grid.weights[i] * grid.values[i];
      for (std::size_t k = 0; k <= n; ++k) rep.coeffs.coeffs[k] += wf * row[k];
    }
    return rep;
  }
  Matrix v;
  for (std::size_t k = 0; k <= n; ++k) v.append_column(column_from_tag(grid, {Stream::s1, k}));
  rep.coeffs.coeffs = weighted_lsq(v, grid.values, grid.weights).coeffs;
  return rep;
}

Degree1Rep fit_degree1(const SampleGrid& grid, std::size_t n0, std::size_t n1) {
  if (n0 + n1 + 1 > grid.size()) throw std::invalid_argument("fit_degree1: too many unknowns");
  Matrix v;
  for (std::size_t k = 0; k <= n0; ++k) v.append_column(column_from_tag(grid, {Stream::s1, k}));
  for (std::size_t k = 1; k <= n1; ++k) v.append_column(column_from_tag(grid, {Stream::s2, k}));
  const LsqResult res = weighted_lsq(v, grid.values, grid.weights);
  Degree1Rep rep;
  rep.numerator.basis = Basis::legendre;
  rep.numerator.x_min = grid.x_min;
  rep.numerator.x_max = grid.x_max;
  rep.numerator.coeffs.assign(res.coeffs.begin(), res.coeffs.begin() + static_cast<std::ptrdiff_t>(n0 + 1));
  rep.denominator_tail.assign(res.coeffs.begin() + static_cast<std::ptrdiff_t>(n0 + 1), res.coeffs.end());
  return rep;
}

void refresh_a_scale(Degree2Rep& rep, std::span<const double> positions) {
  double m = 0.0;
  for (double x : positions) m = std::max(m, std::abs(rep.a(x)));
  rep.a_scale = m;
}

Degree2Rep rep_from_columns(const SampleGrid& grid, std::span<const ColumnTag> tags,
                            std::span<const double> eta) {
  if (tags.size() != eta.size()) throw std::invalid_argument("rep_from_columns: size mismatch");
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (const auto& t : tags) {
    if (t.stream == Stream::s1) d1 = std::max(d1, t.degree + 1);
    if (t.stream == Stream::s2) d2 = std::max(d2, t.degree + 1);
    if (t.stream == Stream::s3) d3 = std::max(d3, t.degree + 1);
  }
  Degree2Rep rep;
  for (PolyCoeffs* p : {&rep.a, &rep.b, &rep.c}) {
    p->basis = Basis::legendre;
    p->x_min = grid.x_min;
    p->x_max = grid.x_max;
  }
  rep.a.coeffs.assign(std::max<std::size_t>(d3, 1), 0.0);
  rep.a.coeffs[0] = 1.0;
  rep.b.coeffs.assign(d2, 0.0);
  rep.c.coeffs.assign(d1, 0.0);
  for (std::size_t j = 0; j < tags.size(); ++j) {
    switch (tags[j].stream) {
      case Stream::s1: rep.c.coeffs[tags[j].degree] += eta[j]; break;
      case Stream::s2: rep.b.coeffs[tags[j].degree] += eta[j]; break;
      case Stream::s3: rep.a.coeffs[tags[j].degree] -= eta[j]; break;
    }
  }
  refresh_a_scale(rep, grid.mapped);
  return rep;
}

Degree2Rep fit_degree2_uniform(const SampleGrid& grid, std::size_t n0, std::size_t n1,
                               std::size_t n2) {
  if (n0 + n1 + n2 + 2 > grid.size())
    throw std::invalid_argument("fit_degree2_uniform: K exceeds the grid size");
  const Dictionary dict = assemble(grid, n0, n1, n2);
  const LsqResult res = weighted_lsq_basic(dict.columns, dict.target, grid.weights);
  Degree2Rep rep = rep_from_columns(grid, dict.tags, res.coeffs);
  rep.fit_residual = res.residual_norm;
  rep.provenance = {"deg2-uniform", n0, n1, n2, ""};
  for (std::size_t j : res.dropped) rep.degeneracy.push_back(dict.tags[j].label());
  rep.index = assign_index(rep, grid).index;
  return rep;
}

Degree2Rep compose_piecewise_manifold(const PolyCoeffs& p_minus, const PolyCoeffs& p_plus,
                                      double truncate_tol) {
  check_same_domain(p_minus, p_plus);
  const PolyCoeffs q = basis_convert(p_plus, p_minus.basis);
  const Basis basis = p_minus.basis;

  Degree2Rep rep;
  for (PolyCoeffs* p : {&rep.a, &rep.b, &rep.c}) {
    p->basis = basis;
    p->x_min = p_minus.x_min;
    p->x_max = p_minus.x_max;
  }
  rep.a.coeffs = {1.0};
  rep.b.coeffs = padded_sum(p_minus.coeffs, q.coeffs);

  std::vector<double> prod;
  if (basis == Basis::monomial) {
    const LPoly pm(p_minus.coeffs.begin(), p_minus.coeffs.end()), pp(q.coeffs.begin(), q.coeffs.end());
    const LPoly r = poly_mul(pm, pp);
    prod.assign(r.begin(), r.end());
  } else {
    prod = legendre_product(p_minus.coeffs, q.coeffs);
  }
  for (double& v : prod) v = -v;
  rep.c.coeffs = std::move(prod);
  if (rep.c.coeffs.empty()) rep.c.coeffs = {0.0};

  if (truncate_tol > 0.0) {
    const PolyCoeffs cl = basis_convert(rep.c, Basis::legendre);
    double cmax = 0.0;
    for (double v : cl.coeffs) cmax = std::max(cmax, std::abs(v));
    std::size_t keep = cl.coeffs.size();
    while (keep > 1 && std::abs(cl.coeffs[keep - 1]) <= truncate_tol * cmax) --keep;
    if (keep < cl.coeffs.size()) {
      PolyCoeffs t = cl;
      t.coeffs.resize(keep);
      rep.c = basis_convert(t, basis);
    }
  }

  if (basis == Basis::legendre) {
    // a = L_0 is the constant 1/sqrt(2); scale b and c to the same manifold
    for (double& v : rep.b.coeffs) v *= kL0;
    for (double& v : rep.c.coeffs) v *= kL0;
  }

  std::vector<double> probe(257);
  for (std::size_t i = 0; i < probe.size(); ++i)
    probe[i] = p_minus.x_min + (p_minus.x_max - p_minus.x_min) * static_cast<double>(i) / 256.0;
  refresh_a_scale(rep, probe);
  rep.provenance.method = "composed";
  return rep;
}

Degree2Rep normalized_form(const Degree2Rep& rep) {
  const double k = constant_part(rep.a);
  if (k == 0.0) throw NumericalError("normalized_form: a has no constant part");
  Degree2Rep out = rep;
  for (PolyCoeffs* p : {&out.a, &out.b, &out.c})
    for (double& v : p->coeffs) v /= k;
  out.a_scale = rep.a_scale / std::abs(k);
  return out;
}

double weighted_norm(std::span<const double> v, std::span<const double> w) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = std::sqrt(w[i]) * v[i];
  return norm2(s);
}

double residual_l2(const Representation& rep, const SampleGrid& grid,
                   const std::function<double(double)>& reference, std::string* diagnostic) {
  std::vector<double> diff(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.mapped[i];
    try {
      diff[i] = eval_rep(rep, x) - (reference ? reference(x) : grid.values[i]);
    } catch (const std::exception& e) {
      if (diagnostic) *diagnostic = e.what();
      return std::numeric_limits<double>::infinity();
    }
  }
  return weighted_norm(diff, grid.weights);
}

double residual_l2(const Representation& rep, const SampleGrid& grid, std::string* diagnostic) {
  return residual_l2(rep, grid, nullptr, diagnostic);
}

}  // namespace quadrep
