#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "quadrep/dictionary.hpp"

namespace quadrep {

// Legendre coefficients act on the reference variable t in [-1, 1];
// monomial coefficients act on the domain variable x.
enum class Basis { legendre, monomial };

struct PolyCoeffs {
  Basis basis = Basis::legendre;
  std::vector<double> coeffs;
  double x_min = -1.0;
  double x_max = 1.0;

  std::size_t degree() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  // x must lie in [x_min, x_max] (up to rounding); std::domain_error otherwise.
  double operator()(double x) const;
};

PolyCoeffs basis_convert(const PolyCoeffs& p, Basis target);

// Value of p as a constant function, i.e. its projection onto the constants.
double constant_part(const PolyCoeffs& p);

struct Degree0Rep {
  PolyCoeffs coeffs;
};

// c(x) / b(x), b = 1 - sum_{n>=1} b_n L_n. Only the tail b_n is stored, so the
// constant part of the denominator is exactly 1.
struct Degree1Rep {
  PolyCoeffs numerator;
  std::vector<double> denominator_tail;  // b_1..b_N1

  double denominator_at(double x) const;
  PolyCoeffs denominator() const;  // full Legendre series
};

// Piecewise constant +-1 selector with sign flips at breakpoints (domain
// coordinates). x < breakpoints[0] gets first_sign.
struct IndexFunction {
  std::vector<double> breakpoints;
  int first_sign = +1;

  int sign_at(double x) const;

  // Breakpoints are placed midway between neighbouring positions whose signs differ.
  static IndexFunction from_dense(std::span<const double> positions, std::span<const int> signs);
  std::vector<int> to_dense(std::span<const double> positions) const;
};

struct FitProvenance {
  std::string method;  // deg2-uniform, deg2-greedy, deg2-rrqr, composed, ...
  std::size_t n0 = 0, n1 = 0, n2 = 0;
  std::string trace_id;
};

// a f^2 - b f - c = 0 with a = L_0 - sum_{n>=1} a_n L_n for fitted reps.
struct Degree2Rep {
  PolyCoeffs a, b, c;
  IndexFunction index;
  double fit_residual = 0.0;
  double a_scale = 0.0;  // max |a| over the sample set, for the linear fallback
  FitProvenance provenance;
  std::vector<std::string> degeneracy;  // dropped column labels, if any
};

using Representation = std::variant<Degree0Rep, Degree1Rep, Degree2Rep>;

struct RootPair {
  double lo = 0.0, hi = 0.0;
  double plus = 0.0, minus = 0.0;  // branches for index +1 / -1
  double discriminant = 0.0;
  bool linear = false;   // a(x) negligible, single root -c/b in every slot
  bool clamped = false;  // tiny negative discriminant set to zero
};

inline constexpr double kLinearThreshold = 1e-10;
inline constexpr double kPoleThreshold = 1e-13;

// Cancellation-free roots of a f^2 - b f - c at x. Throws ComplexRootError for
// D < -1e-8 (b^2 + 4|ac| + 1).
RootPair roots_at(const Degree2Rep& rep, double x);

struct IndexAssignment {
  IndexFunction index;
  std::vector<int> dense;
  std::vector<std::size_t> undefined;  // nodes with complex roots
};

// Nearest-root selection against the sample values; equidistant picks +1.
IndexAssignment assign_index(const Degree2Rep& rep, const SampleGrid& grid);
IndexAssignment assign_index(const Degree2Rep& rep, std::span<const double> positions,
                             std::span<const double> values);

double eval_rep(const Degree0Rep& rep, double x);
double eval_rep(const Degree1Rep& rep, double x);
double eval_rep(const Degree2Rep& rep, double x);
double eval_rep(const Representation& rep, double x);
std::vector<double> eval_rep(const Representation& rep, std::span<const double> xs);

Degree0Rep fit_degree0(const SampleGrid& grid, std::size_t n);
Degree1Rep fit_degree1(const SampleGrid& grid, std::size_t n0, std::size_t n1);
Degree2Rep fit_degree2_uniform(const SampleGrid& grid, std::size_t n0, std::size_t n1,
                               std::size_t n2);

// Packs a coefficient vector over dictionary columns into (a, b, c). Sets
// a_scale from the grid; index is left at its default.
Degree2Rep rep_from_columns(const SampleGrid& grid, std::span<const ColumnTag> tags,
                            std::span<const double> eta);

// a = 1, b = p- + p+, c = -p- p+ in the basis of the inputs (for Legendre
// inputs a is L_0 and b, c are scaled to match). With truncate_tol > 0,
// trailing Legendre coefficients of c below truncate_tol * max|c_n| are dropped.
Degree2Rep compose_piecewise_manifold(const PolyCoeffs& p_minus, const PolyCoeffs& p_plus,
                                      double truncate_tol = 0.0);

// (a, b, c) divided by the constant part of a, so a reads 1 - ... in either basis.
Degree2Rep normalized_form(const Degree2Rep& rep);

// Recomputes max |a| over the given positions.
void refresh_a_scale(Degree2Rep& rep, std::span<const double> positions);

// sqrt(sum w_i (rep(x_i) - ref_i)^2) over the grid; ref defaults to the grid
// values. Evaluation failures give +inf and a message in *diagnostic.
double residual_l2(const Representation& rep, const SampleGrid& grid,
                   std::string* diagnostic = nullptr);
double residual_l2(const Representation& rep, const SampleGrid& grid,
                   const std::function<double(double)>& reference,
                   std::string* diagnostic = nullptr);

// sqrt(sum w_i v_i^2)
double weighted_norm(std::span<const double> v, std::span<const double> w);

}  // namespace quadrep
