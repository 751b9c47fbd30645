#ifndef OVBSL_TYPES_HPP
#define OVBSL_TYPES_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ovbsl/error.hpp"

namespace ovbsl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Binary observation mask; 1 = observed, 0 = missing.
using Mask = std::vector<std::uint8_t>;

/// One K-dimensional observation. Missing entries are stored as literal zeros
/// next to a zero in the mask, so products such as W^T z never need masking.
struct StreamSample {
  Vector z;
  Mask phi;
  std::uint64_t index = 0;  // time index, first sample is 1
};

struct ModelDims {
  Index K = 0;  // ambient dimension
  Index L = 0;  // working rank (overestimate of the true rank)

  void validate() const;
};

/// Fixed model constants. The six Gamma hyperparameters default to the
/// customary vague value 1e-6.
struct HyperParams {
  double mu = 1e-6;
  double nu = 1e-6;
  double psi = 1e-6;
  double xi = 1e-6;
  double kappa = 1e-6;
  double theta = 1e-6;
  double lambda = 0.98;  // forgetting factor in (0, 1]
  bool sparse_subspace = false;

  void validate() const;
};

struct BatchDataset {
  std::vector<StreamSample> samples;
  ModelDims dims;

  std::size_t size() const noexcept { return samples.size(); }
  void validate() const;
};

/// Returns the first violated sample invariant, or nothing when the sample is
/// well formed for `dims`.
std::optional<ErrorCode> check_sample(const StreamSample& sample, const ModelDims& dims);

/// Throws `Error` with the code reported by `check_sample`.
void validate_sample(const StreamSample& sample, const ModelDims& dims);

std::size_t observed_count(const StreamSample& sample) noexcept;

/// Builds a sample from full data `y` and a mask, zeroing the masked entries.
StreamSample make_sample(std::uint64_t index, const Vector& y, Mask phi);

}  // namespace ovbsl

#endif  // OVBSL_TYPES_HPP
