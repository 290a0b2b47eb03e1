#include "quadrep/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace quadrep {

const std::vector<BuiltinFunction>& builtin_functions() {
  using std::numbers::pi;
  static const std::vector<BuiltinFunction> table = {
      {"heaviside-sine", "sin(x)(2H(x)-1)", -1.0, 1.0,
       [](double x) { return std::sin(x) * (2.0 * heaviside(x) - 1.0); }},
      {"cos-one-jump", "cos(x)(2H(x)-1)", -pi, pi,
       [](double x) { return std::cos(x) * (2.0 * heaviside(x) - 1.0); }},
      {"two-jump", "(2H(x+pi/3)-1)cos(x) - H(x-pi/2)sin(x)", -pi, pi,
       [](double x) {
         return (2.0 * heaviside(x + pi / 3.0) - 1.0) * std::cos(x) -
                heaviside(x - pi / 2.0) * std::sin(x);
       }},
      {"sin10pi", "sin(10 pi x)", -1.0, 1.0, [](double x) { return std::sin(10.0 * pi * x); }},
      {"sigmoid60", "1/(1+exp(-60x))", -1.0, 1.0,
       [](double x) { return 1.0 / (1.0 + std::exp(-60.0 * x)); }},
      {"relu", "max(0,x)", -1.0, 1.0, [](double x) { return std::max(0.0, x); }},
      {"step-25-255", "25 on [0,140], 255 on (140,400]", 0.0, 400.0,
       [](double x) { return x <= 140.0 ? 25.0 : 255.0; }},
  };
  return table;
}

const BuiltinFunction& builtin_function(std::string_view name) {
  for (const auto& b : builtin_functions())
    if (b.name == name) return b;
  throw std::invalid_argument("unknown function '" + std::string(name) + "'");
}

}  // namespace quadrep
