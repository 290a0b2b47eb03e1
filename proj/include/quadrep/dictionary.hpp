#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "quadrep/linalg.hpp"
#include "quadrep/orthopoly.hpp"

namespace quadrep {

enum class GridMode {
  quadrature,  // Gauss nodes and weights; f known in closed form
  tabulated    // given sample positions, unit weights
};

// Samples of f on a domain [x_min, x_max] that is mapped affinely onto [-1, 1].
struct SampleGrid {
  double x_min = -1.0;
  double x_max = 1.0;
  GridMode mode = GridMode::quadrature;
  std::vector<double> nodes;    // reference coordinate in [-1, 1]
  std::vector<double> weights;
  std::vector<double> mapped;   // domain coordinate
  std::vector<double> values;

  std::size_t size() const noexcept { return nodes.size(); }
  bool quadrature_exact() const noexcept { return mode == GridMode::quadrature; }

  double to_reference(double x) const;
  double to_domain(double t) const;
};

// Quadrature mode: f evaluated at the M Gauss nodes mapped to [x_min, x_max].
SampleGrid build_grid(const std::function<double(double)>& f, double x_min, double x_max,
                      std::size_t m);

// Quadrature mode from values already sampled at the mapped Gauss nodes (M = size).
SampleGrid build_grid_from_samples(std::span<const double> values, double x_min, double x_max);

// Tabulated mode: node-value pairs. The domain defaults to [front, back] of positions.
SampleGrid build_grid_tabulated(std::span<const double> positions, std::span<const double> values);
SampleGrid build_grid_tabulated(std::span<const double> positions, std::span<const double> values,
                                double x_min, double x_max);

enum class Stream { s1 = 1, s2 = 2, s3 = 3 };

// Column identity: stream s holds f^(s-1) * L_degree.
struct ColumnTag {
  Stream stream = Stream::s1;
  std::size_t degree = 0;

  friend bool operator==(const ColumnTag&, const ColumnTag&) = default;
  std::string label() const;  // e.g. "S2:L4"
};

struct Dictionary {
  std::size_t n0 = 0, n1 = 0, n2 = 0;
  Matrix columns;               // unweighted samples, stream order S1 | S2 | S3
  std::vector<ColumnTag> tags;  // one per column
  std::vector<double> target;   // f^2 * L_0
  std::vector<std::string> warnings;
  bool degenerate = false;      // f identically zero: S2 and S3 carry no information

  std::size_t size() const noexcept { return tags.size(); }
  std::size_t index_of(const ColumnTag& tag) const;  // throws std::out_of_range
};

// Samples of f^(s-1) * L_degree on the grid.
std::vector<double> column_from_tag(const SampleGrid& grid, const ColumnTag& tag);

// f^2 * L_0 on the grid.
std::vector<double> regression_target(const SampleGrid& grid);

// Stream 1 degrees 0..n0, stream 2 degrees 0..n1, stream 3 degrees 1..n2.
Dictionary assemble(const SampleGrid& grid, std::size_t n0, std::size_t n1, std::size_t n2);

// First `count` columns of a stream in ascending degree.
Matrix stream_view(const Dictionary& dict, Stream stream, std::size_t count);
std::size_t stream_length(const Dictionary& dict, Stream stream);

}  // namespace quadrep
