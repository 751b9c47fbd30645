#ifndef OVBSL_BATCH_VB_HPP
#define OVBSL_BATCH_VB_HPP

#include <cstdint>
#include <vector>

#include "ovbsl/types.hpp"

namespace ovbsl {

/// Variational factors over a fixed window of n samples. Sample i (1-based)
/// carries the weight lambda^{n-i}.
struct BatchPosterior {
  Matrix x_mean;              // n x L
  std::vector<Matrix> x_cov;  // n matrices, L x L
  Matrix w_mean;              // K x L
  Matrix w_var;               // K x L
  Vector s;                   // L
  Vector delta;               // L
  Matrix gamma;               // K x L
  Matrix rho;                 // K x L
  double beta = 1.0;
};

struct BatchOptions {
  int max_iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 1;
};

struct BatchFitResult {
  BatchPosterior posterior;
  int iterations = 0;
  bool converged = false;
};

/// Starting point: w_mean ~ N(0, 1/K), unit variances and scales, zero
/// coefficients with identity covariances.
BatchPosterior init_batch_posterior(const BatchDataset& data, std::uint64_t seed);

/// Weights lambda^{n-i} for i = 1..n.
Vector sample_weights(std::size_t n, double lambda);

void batch_update_coefficients(const BatchDataset& data, BatchPosterior& post,
                               const HyperParams& hp);
void batch_update_subspace(const BatchDataset& data, BatchPosterior& post, const HyperParams& hp);
void batch_update_column_scales(BatchPosterior& post, const HyperParams& hp);
void batch_update_element_scales(BatchPosterior& post, const HyperParams& hp);
void batch_update_noise(const BatchDataset& data, BatchPosterior& post, const HyperParams& hp);

/// Cycles coefficient, subspace, column-scale, element-scale and noise
/// updates until max |dw| / (1e-12 + |w|) < tol or max_iters cycles.
BatchFitResult batch_fit(const BatchDataset& data, const HyperParams& hp,
                         const BatchOptions& options = {});

}  // namespace ovbsl

#endif  // OVBSL_BATCH_VB_HPP
