#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "quadrep/representation.hpp"
#include "quadrep/selection.hpp"

namespace quadrep {

// Fitting methods addressed by their total coefficient count K.
enum class Method { deg0, deg1, deg2_uniform, deg2_uniform_n2zero, deg2_greedy, deg2_rrqr };

std::string to_string(Method m);
Method method_from_string(const std::string& name);  // std::invalid_argument if unknown

struct MethodOptions {
  std::size_t rrqr_cap = 40;
  double rrqr_tol = 1e-12;
  std::size_t greedy_cap = 60;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
};

struct Degrees {
  std::size_t n0 = 0, n1 = 0, n2 = 0;
};

// deg0: N0 = K-1. deg1: N0 = ceil((K-1)/2), N1 = K-1-N0.
// deg2-uniform: K-2 split as evenly as possible with N0 >= N1 >= N2.
// deg2-uniform-N2=0: the same split over N0 >= N1 with N2 = 0.
Degrees degrees_for(Method m, std::size_t k);

struct MethodFit {
  Representation rep;
  Degrees degrees;
  std::optional<SelectionTrace> trace;
  std::optional<RankReport> rank;
};

MethodFit fit_method(const SampleGrid& grid, Method m, std::size_t k, const MethodOptions& opts = {});

// residual_l2 against the grid values divided by their weighted norm (the
// absolute residual when the values vanish).
double relative_error(const Representation& rep, const SampleGrid& grid, std::string* diagnostic = nullptr);

}  // namespace quadrep
