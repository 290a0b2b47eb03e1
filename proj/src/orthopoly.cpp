#include "quadrep/orthopoly.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace quadrep {

namespace {

// Classical P_n(x) and P_n'(x) by the three-term recurrence.
void legendre_with_derivative(std::size_t n, double x, double& p, double& dp) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double p2 = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  // Valid away from x = +-1; Gauss nodes never sit there.
  dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
}

void check_domain(double x) {
  if (!(std::abs(x) <= 1.0)) {
    throw std::domain_error("legendre: x = " + std::to_string(x) + " outside [-1, 1]");
  }
}

}  // namespace

QuadratureRule gauss_legendre(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  const std::size_t m = order;
  QuadratureRule rule;
  rule.nodes.assign(m, 0.0);
  rule.weights.assign(m, 0.0);

  const std::size_t half = (m + 1) / 2;
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < half; ++i) {
    // Chebyshev-like initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
    double p = 0.0;
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre_with_derivative(m, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    legendre_with_derivative(m, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Roots come out in decreasing order; mirror into increasing storage.
    rule.nodes[m - 1 - i] = x;
    rule.weights[m - 1 - i] = w;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

double legendre_eval(std::size_t degree, double x) {
  check_domain(x);
  double p0 = 1.0;
  double p1 = x;
  double p = degree == 0 ? 1.0 : x;
  for (std::size_t k = 1; k < degree; ++k) {
    const double kk = static_cast<double>(k);
    p = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
    p0 = p1;
    p1 = p;
  }
  return std::sqrt((2.0 * static_cast<double>(degree) + 1.0) / 2.0) * p;
}

void legendre_row(double x, std::span<double> out) {
  check_domain(x);
  if (out.empty()) return;
  double p0 = 1.0;
  double p1 = x;
  out[0] = std::sqrt(0.5);
  if (out.size() > 1) out[1] = std::sqrt(1.5) * x;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double p = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
    p0 = p1;
    p1 = p;
    out[k + 1] = std::sqrt((2.0 * (kk + 1.0) + 1.0) / 2.0) * p;
  }
}

std::vector<double> legendre_row(std::size_t max_degree, double x) {
  std::vector<double> row(max_degree + 1);
  legendre_row(x, row);
  return row;
}

double inner_product(std::span<const double> u, std::span<const double> v,
                     std::span<const double> weights) {
  if (u.size() != v.size() || u.size() != weights.size()) {
    throw std::invalid_argument("inner_product: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += weights[i] * u[i] * v[i];
  return s;
}

double inner_product(std::span<const double> u, std::span<const double> v,
                     const QuadratureRule& rule) {
  return inner_product(u, v, std::span<const double>(rule.weights));
}

}  // namespace quadrep
