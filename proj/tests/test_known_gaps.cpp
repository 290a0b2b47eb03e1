// Examples whose stated thresholds the implemented methods do not reach.
// They are kept at full strictness and fail until the methods change.
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "quadrep/builtin.hpp"
#include "quadrep/denoise.hpp"
#include "quadrep/selection.hpp"

using namespace quadrep;

TEST_CASE("manifold noise at sigma 5000: LS roots at x = 0 within 3 of 25 and 255") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    const GeneratedData gen =
        generate_noisy(step_ground_truth(), NoiseSpec{NoiseTarget::manifold, 5000.0}, seed);
    const RootPair r = roots_at(fit_manifold_ls(gen.data).manifold(), 0.0);
    CHECK(std::abs(r.minus - 25.0) < 3.0);
    CHECK(std::abs(r.plus - 255.0) < 3.0);
  }
}

TEST_CASE("sigmoid: rrqr residual at most the greedy residual at equal K") {
  const SampleGrid g = build_grid(builtin_function("sigmoid60").f, -1.0, 1.0, 1000);
  for (std::size_t k : {10u, 14u, 18u}) {
    CAPTURE(k);
    const RrqrResult rr = rrqr_select(g, 40, 1e-12, k);
    SelectionConfig cfg;
    cfg.max_terms = k;
    const GreedyResult gr = greedy_select(g, cfg);
    CHECK(rr.rep.fit_residual <= gr.rep.fit_residual);
  }
}

TEST_CASE("cos-one-jump, N0 = N1 = 4: both branches within the fit residual of -cos and cos near 0") {
  const SampleGrid g = build_grid(builtin_function("cos-one-jump").f, -std::numbers::pi, std::numbers::pi, 1000);
  const Degree2Rep r = fit_degree2_uniform(g, 4, 4, 0);
  for (double x : {-0.2, -0.1, 0.1, 0.2}) {
    CAPTURE(x);
    const RootPair rp = roots_at(r, x);
    CHECK(std::abs(rp.lo + std::cos(x)) <= r.fit_residual);
    CHECK(std::abs(rp.hi - std::cos(x)) <= r.fit_residual);
  }
}
