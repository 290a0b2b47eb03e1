#include <cmath>
#include <vector>

#include "doctest.h"
#include "quadrep/builtin.hpp"
#include "quadrep/dictionary.hpp"
#include "quadrep/errors.hpp"

using namespace quadrep;

TEST_CASE("build_grid quadrature mode") {
  const SampleGrid g = build_grid([](double x) { return x; }, -1.0, 1.0, 2);
  REQUIRE(g.size() == 2);
  CHECK(g.values[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(g.values[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(g.quadrature_exact());

  const auto& sig = builtin_function("sigmoid60");
  const SampleGrid s = build_grid(sig.f, -1.0, 1.0, 1000);
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.values[i] > 0.0);
    CHECK(s.values[i] <= 1.0);  // 1 - e^-60 rounds to 1 near x = 1
    if (std::abs(s.mapped[i]) < std::abs(s.mapped[nearest])) nearest = i;
  }
  CHECK(std::abs(s.values[nearest] - 0.5) <= 0.2);

  CHECK_THROWS_AS(build_grid([](double) { return 1.0; }, 1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(build_grid([](double) { return 1.0; }, -1.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid([](double x) { return 1.0 / x; }, -1.0, 1.0, 3), DataError);
}

TEST_CASE("build_grid tabulated step data") {
  const auto& step = builtin_function("step-25-255");
  std::vector<double> xs, fs;
  for (int i = 0; i <= 400; ++i) {
    xs.push_back(i);
    fs.push_back(step.f(i));
  }
  const SampleGrid g = build_grid_tabulated(xs, fs, 0.0, 400.0);
  CHECK(g.size() == 401);
  CHECK(std::count(g.values.begin(), g.values.end(), 25.0) == 141);
  CHECK_FALSE(g.quadrature_exact());
  for (double w : g.weights) CHECK(w == 1.0);
  CHECK(g.nodes.front() == -1.0);
  CHECK(g.nodes.back() == 1.0);

  std::vector<double> bad = fs;
  bad[3] = std::nan("");
  CHECK_THROWS_AS(build_grid_tabulated(xs, bad), DataError);
  std::vector<double> unsorted = xs;
  std::swap(unsorted[4], unsorted[5]);
  CHECK_THROWS_AS(build_grid_tabulated(unsorted, fs), std::invalid_argument);
}

TEST_CASE("affine map round trip") {
  const SampleGrid g = build_grid([](double x) { return x; }, 0.0, 400.0, 64);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(g.to_reference(g.mapped[i]) - g.nodes[i]) < 1e-14);
    if (i > 0) CHECK(g.mapped[i] > g.mapped[i - 1]);
  }
  const SampleGrid h = build_grid([](double x) { return x; }, -3.0, 3.0, 64);
  for (double t : h.nodes) CHECK(std::abs(h.to_reference(h.to_domain(t)) - t) < 1e-14);
}

TEST_CASE("assemble column counts") {
  const SampleGrid g = build_grid([](double x) { return std::exp(x); }, -1.0, 1.0, 50);
  const Dictionary d0 = assemble(g, 0, 0, 0);
  CHECK(d0.size() == 2);
  CHECK(d0.tags[0] == ColumnTag{Stream::s1, 0});
  CHECK(d0.tags[1] == ColumnTag{Stream::s2, 0});
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(d0.target[i] == (g.values[i] * g.values[i]) * std::sqrt(0.5));

  CHECK(assemble(g, 4, 4, 0).size() == 10);

  const Dictionary d3 = assemble(g, 3, 3, 3);
  CHECK(d3.size() == 11);
  CHECK(stream_length(d3, Stream::s3) == 3);
  for (const auto& t : d3.tags) CHECK_FALSE((t.stream == Stream::s3 && t.degree == 0));
  CHECK(d3.warnings.empty());

  // tags unique and each column reproducible bit-exactly from its tag
  for (std::size_t j = 0; j < d3.size(); ++j) {
    for (std::size_t k = j + 1; k < d3.size(); ++k) CHECK_FALSE(d3.tags[j] == d3.tags[k]);
    const auto col = column_from_tag(g, d3.tags[j]);
    const auto stored = d3.columns.col(j);
    CHECK(std::equal(col.begin(), col.end(), stored.begin()));
    CHECK(d3.index_of(d3.tags[j]) == j);
  }
}

TEST_CASE("assemble warnings and degeneracy") {
  const SampleGrid z = build_grid([](double) { return 0.0; }, -1.0, 1.0, 20);
  const Dictionary d = assemble(z, 2, 2, 2);
  CHECK(d.degenerate);
  for (std::size_t j = 0; j < d.size(); ++j)
    if (d.tags[j].stream != Stream::s1)
      for (double v : d.columns.col(j)) CHECK(v == 0.0);

  const SampleGrid small = build_grid([](double x) { return x; }, -1.0, 1.0, 4);
  CHECK_FALSE(assemble(small, 5, 0, 0).warnings.empty());
}

TEST_CASE("stream_view") {
  const SampleGrid g = build_grid([](double x) { return std::cos(x); }, -1.0, 1.0, 30);
  const Dictionary d = assemble(g, 5, 5, 5);
  const Matrix v1 = stream_view(d, Stream::s1, 1);
  REQUIRE(v1.cols() == 1);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(v1(i, 0) == std::sqrt(0.5));

  const Matrix v3 = stream_view(d, Stream::s3, 2);
  REQUIRE(v3.cols() == 2);
  const auto f2l1 = column_from_tag(g, {Stream::s3, 1});
  const auto f2l2 = column_from_tag(g, {Stream::s3, 2});
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(v3(i, 0) == f2l1[i]);
    CHECK(v3(i, 1) == f2l2[i]);
  }
  CHECK(stream_view(d, Stream::s2, 0).cols() == 0);
  CHECK_THROWS_AS(stream_view(d, Stream::s3, 6), std::invalid_argument);
}

TEST_CASE("builtin functions") {
  CHECK(builtin_functions().size() == 7);
  CHECK(builtin_function("heaviside-sine").f(0.0) == 0.0);
  CHECK(builtin_function("cos-one-jump").f(0.0) == 1.0);
  CHECK(builtin_function("cos-one-jump").f(-1e-9) == doctest::Approx(-1.0));
  CHECK(builtin_function("relu").f(-0.5) == 0.0);
  CHECK(builtin_function("step-25-255").f(140.0) == 25.0);
  CHECK(builtin_function("step-25-255").f(141.0) == 255.0);
  const double pi = std::acos(-1.0);
  CHECK(builtin_function("two-jump").f(2.0) == doctest::Approx(std::cos(2.0) - std::sin(2.0)));
  CHECK(builtin_function("two-jump").f(-2.0) == doctest::Approx(-std::cos(-2.0)));
  CHECK(builtin_function("two-jump").x_max == pi);
  CHECK_THROWS_AS(builtin_function("nope"), std::invalid_argument);
}
