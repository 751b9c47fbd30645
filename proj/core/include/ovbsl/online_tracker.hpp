#ifndef OVBSL_ONLINE_TRACKER_HPP
#define OVBSL_ONLINE_TRACKER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ovbsl/types.hpp"

namespace ovbsl {

/// Exponentially weighted accumulators that replace the data history.
///
///   T   (L x K)  sum_i lambda^{n-i} x(i) z(i)^T
///   Q   (L x L)  sum_i lambda^{n-i} (Sigma_x(i) + x(i) x(i)^T)
///   P_k (L x L)  same as Q restricted to samples where entry k was observed
///   d_k          sum_i lambda^{n-i} z_k(i)^2
struct SufficientStats {
  Matrix T;
  Matrix Q;
  std::vector<Matrix> P;
  Vector d;
};

struct TrackerOptions {
  int inner_sweeps = 1;  // coordinate-descent sweeps over l per row and step
  // Initial entry variances of W. Unset means 1/K, the spread of the initial
  // means; a unit value lets the sum of variances in the coefficient precision
  // outweigh W^T Phi W by a factor of about K and the subspace collapses to
  // zero during the first step.
  std::optional<double> initial_w_var;
};

/// Counters that never influence the estimates.
struct TrackerDiagnostics {
  std::uint64_t jitter_retries = 0;
  std::uint64_t beta_denominator_clamps = 0;
  std::uint64_t step_flops = 0;  // floating-point operations of the last step
  std::uint64_t total_flops = 0;
};

struct TrackerState {
  ModelDims dims;
  HyperParams hp;
  TrackerOptions options;

  Matrix w_mean;  // K x L
  Matrix w_var;   // K x L, diagonals of Sigma_w_k
  Vector s;       // L, column scales
  Vector delta;   // L
  Matrix gamma;   // K x L, element scales (all ones unless sparse_subspace)
  Matrix rho;     // K x L
  double beta = 1.0;
  SufficientStats stats;
  std::uint64_t n = 0;

  // diag(R_k(n)) for every row, filled by update_subspace and consumed by the
  // noise update of the same step. Not part of the persistent state.
  Matrix r_diag;

  TrackerDiagnostics diagnostics;

  /// Bytes held by the state; depends on K and L only.
  std::size_t state_bytes() const noexcept;
};

struct CoefficientEstimate {
  Vector x_mean;         // L
  Matrix x_cov;          // L x L
  Matrix second_moment;  // x_cov + x_mean x_mean^T
};

struct StepResult {
  CoefficientEstimate coeff;
  Vector reconstruction;  // W(n) x(n) over all K entries
};

/// Ŵ(0) ~ N(0, 1/K) entrywise from `seed`; w_var from the options (1/K by
/// default); unit scales and noise precision; zero statistics.
TrackerState init_state(const ModelDims& dims, const HyperParams& hp, std::uint64_t seed,
                        TrackerOptions options = {});

/// Posterior of x(n) given the previous-step subspace:
///   Sigma = beta^{-1} (W^T Phi W + sum_k phi_k Sigma_w_k + S)^{-1},  x = beta Sigma W^T z.
/// On a failed factorization a diagonal jitter of 1e-10 * trace / L is added
/// once before giving up with not-positive-definite.
CoefficientEstimate infer_coefficients(TrackerState& state, const StreamSample& sample);

/// T, Q, P_k and d_k recursions for the current sample.
void update_statistics(TrackerState& state, const StreamSample& sample,
                       const CoefficientEstimate& coeff);

/// Coordinate-descent update of row k of Ŵ and its variances against
/// R_k = P_k + Gamma_k S (Gamma and S from the previous step).
void update_subspace_row(TrackerState& state, Index k);
void update_subspace(TrackerState& state);

/// rho_kl then gamma_kl for row k. No-op unless hp.sparse_subspace.
void update_element_scales_row(TrackerState& state, Index k);
void update_element_scales(TrackerState& state);

/// delta_l(n) from the previous s and delta, then s_l(n).
void update_column_scales(TrackerState& state);

/// beta(n) from the recursive statistics. A nonpositive denominator is
/// clamped to 1e-12 and counted in the diagnostics.
void update_noise_precision(TrackerState& state);

/// One full time step: coefficients, statistics, per-row subspace and element
/// scales, column scales, noise precision.
StepResult step(TrackerState& state, const StreamSample& sample);

/// Number of columns whose norm exceeds rel_threshold times the largest
/// column norm.
Index effective_rank(const Matrix& w_mean, double rel_threshold = 1e-3);
inline Index effective_rank(const TrackerState& state, double rel_threshold = 1e-3) {
  return effective_rank(state.w_mean, rel_threshold);
}

/// Effective window used wherever the sample count enters a posterior shape:
/// 1/(1-lambda), or the running count n when lambda == 1.
double effective_window(const TrackerState& state) noexcept;

}  // namespace ovbsl

#endif  // OVBSL_ONLINE_TRACKER_HPP
