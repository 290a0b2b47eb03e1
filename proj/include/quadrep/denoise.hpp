#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quadrep/representation.hpp"

namespace quadrep {

struct NoisyDataset {
  std::vector<double> positions;  // strictly increasing
  std::vector<double> observed;
  std::string noise_model;        // "function", "manifold", "none", ...
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;

  double x_min() const { return positions.front(); }
  double x_max() const { return positions.back(); }
};

// Throws DataError / std::invalid_argument on malformed data.
void validate(const NoisyDataset& data);

// Ground truth as a manifold with its index on a set of positions.
struct GroundTruth {
  std::vector<double> positions;
  Degree2Rep manifold;

  std::vector<double> values() const;
};

// (f - 25)(f - 255) = 0 on the integers 0..400, index -1 on [0, 140].
GroundTruth step_ground_truth();

enum class NoiseTarget { function, manifold };

struct NoiseSpec {
  NoiseTarget target = NoiseTarget::function;
  double sigma = 0.0;
};

struct GeneratedData {
  NoisyDataset data;
  std::vector<double> truth;
  std::vector<double> epsilon;  // the drawn noise, sigma * N(0,1)
  std::size_t clamped = 0;      // manifold noise with negative discriminant
};

// Function noise: f + eps. Manifold noise: the root of a f^2 - b f - (c + eps) = 0
// on the ground-truth branch, clamped to the vertex when complex.
GeneratedData generate_noisy(const GroundTruth& truth, const NoiseSpec& noise, std::uint64_t seed);

// Inner products over the samples (unit weights) with x in the reference
// coordinate t in [-1, 1].
struct MomentSet {
  double S0 = 0, Sx = 0, Sx2 = 0;
  double m_f = 0, m_xf = 0, m_x2f = 0;
  double m_f2 = 0, m_xf2 = 0, m_x2f2 = 0;
  double m_f3 = 0, m_xf3 = 0;
};

MomentSet compute_noisy_moments(const NoisyDataset& data);
MomentSet debias_moments(const MomentSet& noisy, double sigma2);

// f^2 - (b0 + b1 x) f - (c0 + c1 x) = 0. Raw coefficients act on the data
// coordinate x; ref coefficients act on t in [-1, 1].
struct ManifoldFit4 {
  double b0 = 0, b1 = 0, c0 = 0, c1 = 0;
  double ref_b0 = 0, ref_b1 = 0, ref_c0 = 0, ref_c1 = 0;
  double x_min = -1.0, x_max = 1.0;
  std::string method;  // ls, debias, iterative
  double residual = 0.0;
  double condition = 0.0;

  Degree2Rep manifold() const;  // index left at +1 everywhere
};

ManifoldFit4 fit_manifold_ls(const NoisyDataset& data);

// Solves the 4x4 moment system. Throws SingularSystemError when the
// equilibrated 1-norm condition exceeds 1e10.
ManifoldFit4 solve_moment_system(const MomentSet& m, double x_min = -1.0, double x_max = 1.0);

struct VoteResult {
  IndexFunction index;
  std::vector<int> dense;
  std::size_t rounds = 0;
  bool converged = false;
};

// Synchronous majority rounds over each point and its k nearest positions
// (distance ties prefer the lower position); a tied vote keeps the current sign.
VoteResult knn_vote_index(std::span<const int> signs, std::span<const double> positions, std::size_t k,
                          std::size_t max_rounds = 100);

struct Reconstruction {
  ManifoldFit4 fit;
  std::vector<int> nearest;  // nearest-root signs before voting
  VoteResult vote;
  std::vector<double> values;          // f-hat at the positions
  std::vector<double> noise_estimate;  // observed - f-hat
};

// Evaluates the manifold root selected by signs at every position.
std::vector<double> reconstruct(const ManifoldFit4& fit, std::span<const double> positions,
                                std::span<const int> signs);

// Cases 1/2: LS fit, nearest-root index, optional vote (k = 0 disables it).
Reconstruction denoise_ls(const NoisyDataset& data, std::size_t k);

// Case 3: de-biased moments, nearest-root index and k-NN vote.
Reconstruction denoise_case3(const NoisyDataset& data, double sigma2, std::size_t k);

enum class ConstraintKind { one, x, x2, f, xf, x2f, f2, xf2 };

std::string to_string(ConstraintKind c);
ConstraintKind constraint_from_string(const std::string& name);
std::vector<ConstraintKind> all_constraints();

// Sampled constraint vectors g_j, normalized to unit Euclidean norm.
struct NoiseConstraintSet {
  std::vector<ConstraintKind> kinds;
  std::vector<std::vector<double>> vectors;
};

NoiseConstraintSet build_constraints(std::span<const ConstraintKind> kinds, std::span<const double> t,
                                     std::span<const double> f);

struct Projection {
  std::vector<double> corrected;        // eps-bar
  std::vector<double> coefficients;     // c_n of the removed L_0..L_{K-1}
  std::vector<std::size_t> used;        // constraint indices actually imposed
  std::vector<double> constraint_residuals;  // <g_j, eps-bar> for every constraint
};

// Removes sum_{n<K} c_n L_n(t) from the residual so that <g_j, eps-bar> = 0.
// With reduce_dependent the constraints are first thinned to an independent
// subset (pivoted QR, tolerance 1e-10) and K shrinks to match; otherwise a
// dependent set raises SingularSystemError naming the dependent constraints.
Projection project_noise(std::span<const double> residual, const NoiseConstraintSet& constraints,
                         std::span<const double> t, bool reduce_dependent = false);

enum class InitMode { case1, case2, case3 };

struct IterativeConfig {
  std::vector<ConstraintKind> constraints = all_constraints();
  InitMode init = InitMode::case1;
  double init_sigma2 = 0.0;  // case3 only
  std::size_t k = 10;
  std::size_t max_iter = 50;
  double tol = 1e-6;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double ref_b0 = 0, ref_b1 = 0, ref_c0 = 0, ref_c1 = 0;
  double max_rel_change = 0.0;
  std::size_t index_flips = 0;
  std::size_t constraints_used = 0;
  double max_constraint_residual = 0.0;  // relative to ||eps-tilde||
};

struct IterativeResult {
  Reconstruction initial;
  Reconstruction final;
  std::vector<IterationRecord> trace;
  bool converged = false;
  std::string stop_reason;  // empty when converged
};

IterativeResult denoise_iterative(const NoisyDataset& data, const IterativeConfig& config);

double rmse(std::span<const double> a, std::span<const double> b);

}  // namespace quadrep
