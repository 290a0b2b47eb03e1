#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "quadrep/orthopoly.hpp"

using namespace quadrep;

namespace {

// Classical P_n by the unnormalized recurrence in long double, then scaled.
long double legendre_ref(int n, long double x) {
  long double p0 = 1.0L, p1 = x;
  if (n == 0) return std::sqrt(0.5L);
  for (int k = 1; k < n; ++k) {
    const long double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt((2.0L * n + 1.0L) / 2.0L) * p1;
}

std::vector<double> sample(const QuadratureRule& r, std::size_t n) {
  std::vector<double> v;
  for (double x : r.nodes) v.push_back(legendre_eval(n, x));
  return v;
}

}  // namespace

TEST_CASE("gauss_legendre small orders") {
  auto r1 = gauss_legendre(1);
  REQUIRE(r1.order() == 1);
  CHECK(r1.nodes[0] == 0.0);
  CHECK(r1.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

  auto r2 = gauss_legendre(2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
}

TEST_CASE("gauss_legendre M=1000 structure") {
  auto r = gauss_legendre(1000);
  REQUIRE(r.order() == 1000);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.order(); ++i) {
    CHECK(r.weights[i] > 0.0);
    CHECK(std::abs(r.nodes[i]) < 1.0);
    if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
    sum += r.weights[i];
  }
  CHECK(std::abs(sum - 2.0) < 1e-13);
  // nodes are zeros of P_1000: the extended-precision Newton correction is negligible
  for (std::size_t i = 0; i < r.order(); i += 37) {
    const long double x = r.nodes[i];
    const long double p = legendre_ref(1000, x), pm = legendre_ref(999, x);
    const long double dp = 1000.0L * (pm * std::sqrt(2.0L / 1999.0L) - x * p * std::sqrt(2.0L / 2001.0L)) /
                           (1.0L - x * x) * std::sqrt(2001.0L / 2.0L);
    CHECK(std::abs(static_cast<double>(p / dp)) < 1e-15);
  }
}

TEST_CASE("quadrature exactness for monomials") {
  for (std::size_t m : {1u, 2u, 5u, 20u, 63u}) {
    auto r = gauss_legendre(m);
    for (std::size_t k = 0; k <= 2 * m - 1; ++k) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < m; ++i) s += r.weights[i] * std::pow((long double)r.nodes[i], (long double)k);
      const double exact = (k % 2 == 0) ? 2.0 / (k + 1.0) : 0.0;
      CHECK(std::abs((double)s - exact) < 1e-12 * std::max(1.0, exact));
    }
  }
}

TEST_CASE("legendre_eval values") {
  CHECK(legendre_eval(0, 0.37) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(legendre_eval(1, 0.5) == doctest::Approx(std::sqrt(1.5) * 0.5).epsilon(1e-15));
  CHECK(std::abs(legendre_eval(7, 0.9) - (double)legendre_ref(7, 0.9L)) < 1e-14);
  CHECK_THROWS_AS(legendre_eval(3, 1.0000001), std::domain_error);
  CHECK_NOTHROW(legendre_eval(3, -1.0));
}

TEST_CASE("recurrence stability up to degree 200") {
  for (int n = 0; n <= 200; n += 7) {
    for (double x : {-1.0, -0.999, -0.63, -0.1, 0.0, 0.2718, 0.5, 0.87, 0.9999, 1.0}) {
      const long double ref = legendre_ref(n, x);
      const double got = legendre_eval(n, x);
      // absolute floor of 1 near the zeros of L_n, where relative error is undefined
      CHECK(std::abs(got - (double)ref) < 1e-12 * std::max(1.0L, std::abs(ref)));
    }
  }
}

TEST_CASE("legendre_row") {
  auto row = legendre_row(2, 0.0);
  REQUIRE(row.size() == 3);
  CHECK(row[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(row[1] == 0.0);
  CHECK(row[2] == doctest::Approx(-std::sqrt(2.5) / 2.0).epsilon(1e-15));

  auto r0 = legendre_row(0, 1.0);
  REQUIRE(r0.size() == 1);
  CHECK(r0[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));

  auto r10 = legendre_row(10, 0.3);
  for (std::size_t k = 0; k <= 10; ++k) CHECK(r10[k] == legendre_eval(k, 0.3));
  CHECK_THROWS_AS(legendre_row(4, -1.5), std::domain_error);
}

TEST_CASE("inner products") {
  auto r = gauss_legendre(1000);
  auto l3 = sample(r, 3), l2 = sample(r, 2), l5 = sample(r, 5);
  CHECK(std::abs(inner_product(l3, l3, r) - 1.0) < 1e-13);
  CHECK(std::abs(inner_product(l2, l5, r)) < 1e-13);
  CHECK(std::abs(inner_product(r.nodes, r.nodes, r) - 2.0 / 3.0) < 1e-13);
  std::vector<double> short_v(10, 1.0);
  CHECK_THROWS_AS(inner_product(short_v, l3, r), std::invalid_argument);
}

TEST_CASE("orthonormality up to degree 50 at M=1000") {
  auto r = gauss_legendre(1000);
  std::vector<std::vector<double>> cols;
  for (std::size_t n = 0; n <= 50; ++n) cols.push_back(sample(r, n));
  double worst = 0.0;
  for (std::size_t i = 0; i <= 50; ++i)
    for (std::size_t j = 0; j <= 50; ++j)
      worst = std::max(worst, std::abs(inner_product(cols[i], cols[j], r) - (i == j ? 1.0 : 0.0)));
  CHECK(worst < 1e-12);
}
