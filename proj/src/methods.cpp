#include "quadrep/methods.hpp"

#include <stdexcept>

namespace quadrep {

std::string to_string(Method m) {
  switch (m) {
    case Method::deg0: return "deg0";
    case Method::deg1: return "deg1";
    case Method::deg2_uniform: return "deg2-uniform";
    case Method::deg2_uniform_n2zero: return "deg2-uniform-N2=0";
    case Method::deg2_greedy: return "deg2-greedy";
    case Method::deg2_rrqr: return "deg2-rrqr";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::deg0, Method::deg1, Method::deg2_uniform, Method::deg2_uniform_n2zero,
                   Method::deg2_greedy, Method::deg2_rrqr})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name + "'");
}

Degrees degrees_for(Method m, std::size_t k) {
  const std::size_t min_k = (m == Method::deg2_uniform || m == Method::deg2_uniform_n2zero) ? 2 : 1;
  if (k < min_k) throw std::invalid_argument(to_string(m) + ": K must be at least " + std::to_string(min_k));
  Degrees d;
  switch (m) {
    case Method::deg0: d.n0 = k - 1; break;
    case Method::deg1:
      d.n0 = k / 2;  // ceil((K-1)/2)
      d.n1 = k - 1 - d.n0;
      break;
    case Method::deg2_uniform:
      d.n2 = (k - 2) / 3;
      d.n1 = (k - 2 - d.n2) / 2;
      d.n0 = k - 2 - d.n1 - d.n2;
      break;
    case Method::deg2_uniform_n2zero:
      d.n1 = (k - 2) / 2;
      d.n0 = k - 2 - d.n1;
      break;
    case Method::deg2_greedy:
    case Method::deg2_rrqr: break;
  }
  return d;
}

MethodFit fit_method(const SampleGrid& grid, Method m, std::size_t k, const MethodOptions& opts) {
  MethodFit out;
  out.degrees = degrees_for(m, k);
  const Degrees& d = out.degrees;
  switch (m) {
    case Method::deg0: out.rep = fit_degree0(grid, d.n0); break;
    case Method::deg1: out.rep = fit_degree1(grid, d.n0, d.n1); break;
    case Method::deg2_uniform:
    case Method::deg2_uniform_n2zero: out.rep = fit_degree2_uniform(grid, d.n0, d.n1, d.n2); break;
    case Method::deg2_greedy: {
      SelectionConfig cfg;
      cfg.max_terms = k;
      cfg.batch_size = opts.batch_size;
      cfg.stream_cap = opts.greedy_cap;
      cfg.rng_seed = opts.seed;
      GreedyResult r = greedy_select(grid, cfg);
      out.rep = std::move(r.rep);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::deg2_rrqr: {
      RrqrResult r = rrqr_select(grid, opts.rrqr_cap, opts.rrqr_tol, k);
      out.rep = std::move(r.rep);
      out.rank = std::move(r.report);
      break;
    }
  }
  return out;
}

double relative_error(const Representation& rep, const SampleGrid& grid, std::string* diagnostic) {
  const double err = residual_l2(rep, grid, diagnostic);
  const double scale = weighted_norm(grid.values, grid.weights);
  return scale > 0.0 ? err / scale : err;
}

}  // namespace quadrep
