#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace quadrep {

struct BuiltinFunction {
  std::string name;
  std::string formula;
  double x_min;
  double x_max;
  std::function<double(double)> f;
};

// H(0) = 1.
inline double heaviside(double x) { return x < 0.0 ? 0.0 : 1.0; }

const std::vector<BuiltinFunction>& builtin_functions();

// Throws std::invalid_argument for an unknown name.
const BuiltinFunction& builtin_function(std::string_view name);

}  // namespace quadrep
