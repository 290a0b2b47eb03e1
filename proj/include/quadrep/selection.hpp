#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quadrep/dictionary.hpp"
#include "quadrep/representation.hpp"

namespace quadrep {

struct SelectionConfig {
  std::size_t batch_size = 1;                // 1, 3 or 5
  double target_residual = 0.0;              // absolute ||W^{1/2}(V eta - y)||
  std::optional<std::size_t> max_terms;      // total selected columns
  std::size_t stream_cap = 60;               // highest Legendre degree per stream
  std::uint64_t rng_seed = 0;
};

struct CandidateRecord {
  Stream stream = Stream::s1;
  std::vector<ColumnTag> columns;
  std::optional<double> residual;  // empty when the block could not be formed
};

struct SelectionStep {
  std::size_t step = 0;
  std::vector<CandidateRecord> candidates;
  std::vector<ColumnTag> chosen;
  double residual_after = 0.0;
  bool tie_broken = false;
  std::vector<std::string> notes;  // skipped dependent columns
};

struct SelectionTrace {
  std::string id;
  std::vector<SelectionStep> steps;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::uint64_t rng_seed = 0;
  bool reached_target = false;
  bool exhausted = false;  // streams ran dry before the stopping rule

  std::vector<ColumnTag> selected() const;
};

struct GreedyResult {
  Degree2Rep rep;
  SelectionTrace trace;
};

GreedyResult greedy_select(const SampleGrid& grid, const SelectionConfig& config);

struct RankReport {
  std::size_t rank = 0;          // columns kept
  std::size_t numerical_rank = 0;  // before any max_terms cap
  std::size_t column_count = 0;
  std::vector<double> diag_magnitudes;
  std::vector<ColumnTag> selected;  // pivot order
  double truncate_tol = 0.0;
};

struct RrqrResult {
  Degree2Rep rep;
  RankReport report;
  std::vector<double> projection;  // Phi eta at the nodes (weighted space)
};

// Pivoted QR over W^{1/2}[S1, S2, S3] with every stream capped at degree
// stream_cap, truncated at |R_kk| < truncate_tol |R_00| and optionally at
// max_terms columns. Throws NumericalError if nothing survives.
RrqrResult rrqr_select(const SampleGrid& grid, std::size_t stream_cap, double truncate_tol = 1e-12,
                       std::optional<std::size_t> max_terms = std::nullopt);

}  // namespace quadrep
