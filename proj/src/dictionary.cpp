#include "quadrep/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quadrep/errors.hpp"

namespace quadrep {

double SampleGrid::to_reference(double x) const {
  return (2.0 * x - (x_min + x_max)) / (x_max - x_min);
}

double SampleGrid::to_domain(double t) const {
  return 0.5 * (x_min + x_max) + 0.5 * (x_max - x_min) * t;
}

namespace {

void check_domain(double x_min, double x_max) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
    throw std::invalid_argument("build_grid: degenerate domain");
}

void check_values(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw DataError("build_grid: non-finite sample at index " + std::to_string(i));
}

SampleGrid quadrature_grid(double x_min, double x_max, std::size_t m) {
  if (m < 2) throw std::invalid_argument("build_grid: need at least 2 nodes");
  check_domain(x_min, x_max);
  QuadratureRule rule = gauss_legendre(m);
  SampleGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.mode = GridMode::quadrature;
  g.nodes = std::move(rule.nodes);
  g.weights = std::move(rule.weights);
  g.mapped.reserve(m);
  for (double t : g.nodes) g.mapped.push_back(g.to_domain(t));
  return g;
}

}  // namespace

SampleGrid build_grid(const std::function<double(double)>& f, double x_min, double x_max,
                      std::size_t m) {
  SampleGrid g = quadrature_grid(x_min, x_max, m);
  g.values.reserve(m);
  for (double x : g.mapped) g.values.push_back(f(x));
  check_values(g.values);
  return g;
}

SampleGrid build_grid_from_samples(std::span<const double> values, double x_min, double x_max) {
  SampleGrid g = quadrature_grid(x_min, x_max, values.size());
  check_values(values);
  g.values.assign(values.begin(), values.end());
  return g;
}

SampleGrid build_grid_tabulated(std::span<const double> positions, std::span<const double> values) {
  if (positions.empty()) throw std::invalid_argument("build_grid_tabulated: no samples");
  return build_grid_tabulated(positions, values, positions.front(), positions.back());
}

SampleGrid build_grid_tabulated(std::span<const double> positions, std::span<const double> values,
                                double x_min, double x_max) {
  if (positions.size() != values.size())
    throw std::invalid_argument("build_grid_tabulated: positions/values length mismatch");
  if (positions.size() < 2) throw std::invalid_argument("build_grid_tabulated: need at least 2 samples");
  check_domain(x_min, x_max);
  check_values(positions);
  check_values(values);
  SampleGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.mode = GridMode::tabulated;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i > 0 && !(positions[i] > positions[i - 1]))
      throw std::invalid_argument("build_grid_tabulated: positions must be strictly increasing");
    if (positions[i] < x_min || positions[i] > x_max)
      throw std::invalid_argument("build_grid_tabulated: position outside domain");
    // clamp guards the endpoints against rounding just outside [-1, 1]
    g.nodes.push_back(std::clamp(g.to_reference(positions[i]), -1.0, 1.0));
  }
  g.mapped.assign(positions.begin(), positions.end());
  g.values.assign(values.begin(), values.end());
  g.weights.assign(positions.size(), 1.0);
  return g;
}

std::string ColumnTag::label() const {
  return "S" + std::to_string(static_cast<int>(stream)) + ":L" + std::to_string(degree);
}

std::size_t Dictionary::index_of(const ColumnTag& tag) const {
  for (std::size_t j = 0; j < tags.size(); ++j)
    if (tags[j] == tag) return j;
  throw std::out_of_range("Dictionary: no column " + tag.label());
}

std::vector<double> column_from_tag(const SampleGrid& grid, const ColumnTag& tag) {
  if (tag.stream == Stream::s3 && tag.degree == 0)
    throw std::invalid_argument("column_from_tag: stream 3 has no degree-0 column");
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double l = legendre_eval(tag.degree, grid.nodes[i]);
    const double f = grid.values[i];
    switch (tag.stream) {
      case Stream::s1: out[i] = l; break;
      case Stream::s2: out[i] = f * l; break;
      case Stream::s3: out[i] = (f * f) * l; break;
    }
  }
  return out;
}

std::vector<double> regression_target(const SampleGrid& grid) {
  std::vector<double> y(grid.size());
  const double l0 = legendre_eval(0, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) y[i] = (grid.values[i] * grid.values[i]) * l0;
  return y;
}

Dictionary assemble(const SampleGrid& grid, std::size_t n0, std::size_t n1, std::size_t n2) {
  Dictionary d;
  d.n0 = n0;
  d.n1 = n1;
  d.n2 = n2;
  auto add = [&](Stream s, std::size_t deg) {
    const ColumnTag tag{s, deg};
    d.columns.append_column(column_from_tag(grid, tag));
    d.tags.push_back(tag);
  };
  for (std::size_t k = 0; k <= n0; ++k) add(Stream::s1, k);
  for (std::size_t k = 0; k <= n1; ++k) add(Stream::s2, k);
  for (std::size_t k = 1; k <= n2; ++k) add(Stream::s3, k);
  d.target = regression_target(grid);

  const std::size_t top = std::max({n0, n1, n2});
  const std::size_t m = grid.size();
  if (grid.quadrature_exact() && 2 * top > 2 * m - 1)
    d.warnings.push_back("degree " + std::to_string(top) +
                         " exceeds the exactness budget of a " + std::to_string(m) + "-node rule");
  if (!grid.quadrature_exact() && top + 1 > m)
    d.warnings.push_back("degree " + std::to_string(top) + " exceeds the sample count");
  if (d.size() > m) d.warnings.push_back("more columns than samples");

  bool all_zero = true;
  for (double v : grid.values) all_zero = all_zero && v == 0.0;
  d.degenerate = all_zero;
  if (all_zero) d.warnings.push_back("f is identically zero; streams 2 and 3 are degenerate");
  return d;
}

std::size_t stream_length(const Dictionary& dict, Stream stream) {
  switch (stream) {
    case Stream::s1: return dict.n0 + 1;
    case Stream::s2: return dict.n1 + 1;
    case Stream::s3: return dict.n2;
  }
  return 0;
}

Matrix stream_view(const Dictionary& dict, Stream stream, std::size_t count) {
  if (count > stream_length(dict, stream))
    throw std::invalid_argument("stream_view: count exceeds stream length");
  const std::size_t first = stream == Stream::s3 ? 1 : 0;
  Matrix out(dict.columns.rows(), 0);
  for (std::size_t k = 0; k < count; ++k)
    out.append_column(dict.columns.col(dict.index_of(ColumnTag{stream, first + k})));
  return out;
}

}  // namespace quadrep
