#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace quadrep {

// Gauss-Legendre rule on [-1, 1]. Nodes strictly increasing, weights positive.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }
};

// Order-M rule; exact for polynomials of degree <= 2M-1.
QuadratureRule gauss_legendre(std::size_t order);

// Orthonormal Legendre polynomial sqrt((2n+1)/2) P_n(x) on [-1, 1].
// Throws std::domain_error for |x| > 1.
double legendre_eval(std::size_t degree, double x);

// [L_0(x), ..., L_N(x)] from a single recurrence pass.
std::vector<double> legendre_row(std::size_t max_degree, double x);

// Writes L_0(x)..L_N(x) into out (size N+1).
void legendre_row(double x, std::span<double> out);

// Discrete inner product sum_i w_i u_i v_i.
double inner_product(std::span<const double> u, std::span<const double> v,
                     std::span<const double> weights);
double inner_product(std::span<const double> u, std::span<const double> v,
                     const QuadratureRule& rule);

}  // namespace quadrep
