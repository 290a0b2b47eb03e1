#include "quadrep/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadrep/errors.hpp"
#include "quadrep/linalg.hpp"
#include "quadrep/random.hpp"

namespace quadrep {

std::vector<ColumnTag> SelectionTrace::selected() const {
  std::vector<ColumnTag> out;
  for (const auto& s : steps) out.insert(out.end(), s.chosen.begin(), s.chosen.end());
  return out;
}

namespace {

struct WeightedColumn {
  std::vector<double> unit;  // W^{1/2} d / ||d||_W
  double norm = 0.0;         // ||d||_W
};

WeightedColumn weighted_unit(const SampleGrid& grid, const ColumnTag& tag) {
  WeightedColumn c;
  c.unit = column_from_tag(grid, tag);
  for (std::size_t i = 0; i < c.unit.size(); ++i) c.unit[i] *= std::sqrt(grid.weights[i]);
  c.norm = norm2(c.unit);
  if (c.norm > 0.0)
    for (double& v : c.unit) v /= c.norm;
  return c;
}

}  // namespace

GreedyResult greedy_select(const SampleGrid& grid, const SelectionConfig& config) {
  if (config.batch_size != 1 && config.batch_size != 3 && config.batch_size != 5)
    throw std::invalid_argument("greedy_select: batch size must be 1, 3 or 5");
  if (config.stream_cap < 1) throw std::invalid_argument("greedy_select: stream cap must be >= 1");
  if (!(config.target_residual > 0.0) && !config.max_terms)
    throw std::invalid_argument("greedy_select: need a target residual or max_terms");

  std::vector<double> target = regression_target(grid);
  for (std::size_t i = 0; i < target.size(); ++i) target[i] *= std::sqrt(grid.weights[i]);
  IncrementalQR qr(target);

  constexpr std::array<Stream, 3> streams = {Stream::s1, Stream::s2, Stream::s3};
  std::array<std::vector<std::size_t>, 3> remaining;
  for (std::size_t d = 0; d <= config.stream_cap; ++d) {
    remaining[0].push_back(d);
    remaining[1].push_back(d);
    if (d >= 1) remaining[2].push_back(d);
  }

  SplitMix64 rng(config.rng_seed);
  GreedyResult out;
  SelectionTrace& trace = out.trace;
  trace.rng_seed = config.rng_seed;
  trace.initial_residual = qr.residual_norm();

  std::vector<ColumnTag> chosen_tags;
  std::vector<double> chosen_norms;
  double residual = trace.initial_residual;

  for (std::size_t step = 1;; ++step) {
    if (config.target_residual > 0.0 && residual <= config.target_residual) {
      trace.reached_target = true;
      break;
    }
    const std::size_t budget = config.max_terms
                                   ? *config.max_terms - std::min(*config.max_terms, chosen_tags.size())
                                   : std::numeric_limits<std::size_t>::max();
    if (budget == 0) break;
    const std::size_t take = std::min(config.batch_size, budget);

    SelectionStep rec;
    rec.step = step;
    std::vector<Matrix> blocks(3);
    std::vector<std::vector<double>> block_norms(3);
    for (std::size_t s = 0; s < 3; ++s) {
      CandidateRecord cand;
      cand.stream = streams[s];
      for (;;) {
        const std::size_t n = std::min(take, remaining[s].size());
        if (n == 0) break;
        Matrix block(grid.size(), 0);
        std::vector<ColumnTag> tags;
        std::vector<double> norms;
        std::optional<std::size_t> dependent;
        for (std::size_t k = 0; k < n; ++k) {
          const ColumnTag tag{streams[s], remaining[s][k]};
          const WeightedColumn wc = weighted_unit(grid, tag);
          if (wc.norm == 0.0) {
            dependent = k;
            break;
          }
          block.append_column(wc.unit);
          tags.push_back(tag);
          norms.push_back(wc.norm);
        }
        std::optional<double> r;
        if (!dependent) {
          r = qr.trial_residual(block);
          if (!r) {
            // locate the first column that fails
            for (std::size_t k = 1; k <= block.cols() && !dependent; ++k) {
              Matrix prefix(grid.size(), 0);
              for (std::size_t j = 0; j < k; ++j) prefix.append_column(block.col(j));
              if (!qr.trial_residual(prefix)) dependent = k - 1;
            }
            if (!dependent) dependent = 0;
          }
        }
        if (dependent) {
          const ColumnTag bad{streams[s], remaining[s][*dependent]};
          rec.notes.push_back("skipped dependent column " + bad.label());
          remaining[s].erase(remaining[s].begin() + static_cast<std::ptrdiff_t>(*dependent));
          continue;
        }
        cand.columns = std::move(tags);
        cand.residual = r;
        blocks[s] = std::move(block);
        block_norms[s] = std::move(norms);
        break;
      }
      rec.candidates.push_back(std::move(cand));
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : rec.candidates)
      if (c.residual) best = std::min(best, *c.residual);
    if (!std::isfinite(best)) {
      trace.exhausted = true;
      if (!rec.notes.empty()) trace.steps.push_back(std::move(rec));
      break;
    }
    std::vector<std::size_t> tied;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& r = rec.candidates[s].residual;
      if (r && std::abs(*r - best) <= 1e-12 * best) tied.push_back(s);
    }
    std::size_t pick = tied.front();
    if (tied.size() > 1) {
      pick = tied[rng.below(tied.size())];
      rec.tie_broken = true;
    }

    const Matrix& block = blocks[pick];
    for (std::size_t k = 0; k < block.cols(); ++k) {
      const ColumnTag tag = rec.candidates[pick].columns[k];
      if (qr.append_column(block.col(k)) == IncrementalQR::Append::appended) {
        chosen_tags.push_back(tag);
        chosen_norms.push_back(block_norms[pick][k]);
        rec.chosen.push_back(tag);
      } else {
        rec.notes.push_back("dropped dependent column " + tag.label());
      }
      auto& rem = remaining[static_cast<std::size_t>(tag.stream) - 1];
      rem.erase(std::find(rem.begin(), rem.end(), tag.degree));
    }
    residual = qr.residual_norm();
    rec.residual_after = residual;
    trace.steps.push_back(std::move(rec));
  }

  std::vector<double> eta = qr.solve();
  for (std::size_t j = 0; j < eta.size(); ++j) eta[j] /= chosen_norms[j];
  if (chosen_tags.empty()) {
    // nothing selected: a = L_0, b = c = 0
    out.rep = rep_from_columns(grid, {}, {});
  } else {
    out.rep = rep_from_columns(grid, chosen_tags, eta);
  }
  trace.final_residual = residual;
  trace.id = "greedy:b" + std::to_string(config.batch_size) + ":cap" + std::to_string(config.stream_cap) +
             ":seed" + std::to_string(config.rng_seed) + ":K" + std::to_string(chosen_tags.size());
  out.rep.fit_residual = residual;
  out.rep.provenance.method = "deg2-greedy";
  out.rep.provenance.trace_id = trace.id;
  for (const auto& t : chosen_tags) {
    auto& n = t.stream == Stream::s1 ? out.rep.provenance.n0
              : t.stream == Stream::s2 ? out.rep.provenance.n1 : out.rep.provenance.n2;
    n = std::max(n, t.degree);
  }
  out.rep.index = assign_index(out.rep, grid).index;
  return out;
}

RrqrResult rrqr_select(const SampleGrid& grid, std::size_t stream_cap, double truncate_tol,
                       std::optional<std::size_t> max_terms) {
  if (stream_cap < 1) throw std::invalid_argument("rrqr_select: stream cap must be >= 1");
  const Dictionary dict = assemble(grid, stream_cap, stream_cap, stream_cap);
  Matrix a = dict.columns;
  std::vector<double> b = dict.target;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double sw = std::sqrt(grid.weights[i]);
    b[i] *= sw;
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= sw;
  }
  const PivotedQR f = pivoted_qr(a);

  RrqrResult out;
  RankReport& rep = out.report;
  rep.column_count = a.cols();
  rep.truncate_tol = truncate_tol;
  rep.diag_magnitudes = f.diag_magnitudes;
  rep.numerical_rank = f.numerical_rank(truncate_tol);
  rep.rank = max_terms ? std::min(rep.numerical_rank, *max_terms) : rep.numerical_rank;
  if (rep.rank == 0) throw NumericalError("rrqr_select: truncation left no columns");
  const std::size_t r = rep.rank;

  std::vector<double> eta(r, 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += f.q(i, j) * b[i];
    eta[j] = s;
  }
  out.projection.assign(grid.size(), 0.0);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < grid.size(); ++i) out.projection[i] += f.q(i, j) * eta[j];

  const std::vector<double> z = solve_upper(f.r, eta, r);
  std::vector<ColumnTag> tags;
  for (std::size_t j = 0; j < r; ++j) tags.push_back(dict.tags[f.permutation[j]]);
  rep.selected = tags;

  out.rep = rep_from_columns(grid, tags, z);
  std::vector<double> resid(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) resid[i] = b[i] - out.projection[i];
  out.rep.fit_residual = norm2(resid);
  out.rep.provenance = {"deg2-rrqr", stream_cap, stream_cap, stream_cap,
                        "rrqr:cap" + std::to_string(stream_cap) + ":rank" + std::to_string(r)};
  out.rep.index = assign_index(out.rep, grid).index;
  return out;
}

}  // namespace quadrep
