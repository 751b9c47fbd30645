#include "ovbsl/types.hpp"

#include <algorithm>
#include <string>

namespace ovbsl {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension_mismatch:
      return "dimension-mismatch";
    case ErrorCode::mask_value_not_binary:
      return "mask-value-not-binary";
    case ErrorCode::nonzero_at_masked_position:
      return "nonzero-at-masked-position";
    case ErrorCode::nonpositive_parameter:
      return "nonpositive-parameter";
    case ErrorCode::overflow:
      return "overflow";
    case ErrorCode::not_positive_definite:
      return "not-positive-definite";
    case ErrorCode::division_underflow:
      return "division-underflow";
    case ErrorCode::nonpositive_denominator:
      return "nonpositive-denominator";
    case ErrorCode::invalid_spec:
      return "invalid-spec";
    case ErrorCode::shape_mismatch:
      return "shape-mismatch";
    case ErrorCode::io_error:
      return "io-error";
    case ErrorCode::format_error:
      return "format-error";
    case ErrorCode::config_error:
      return "config-error";
    case ErrorCode::cap_exceeded:
      return "cap-exceeded";
  }
  return "unknown";
}

void ModelDims::validate() const {
  if (L < 1 || L > K) {
    throw Error(ErrorCode::dimension_mismatch,
                "need 1 <= L <= K, got K=" + std::to_string(K) + " L=" + std::to_string(L));
  }
}

void HyperParams::validate() const {
  for (double v : {mu, nu, psi, xi, kappa, theta}) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::nonpositive_parameter, "Gamma hyperparameters must be positive");
    }
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::nonpositive_parameter, "forgetting factor must lie in (0, 1]");
  }
}

void BatchDataset::validate() const {
  dims.validate();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    validate_sample(samples[i], dims);
    if (samples[i].index != i + 1) {
      throw Error(ErrorCode::format_error, "sample indices must be consecutive from 1; position " +
                                               std::to_string(i) + " has index " +
                                               std::to_string(samples[i].index));
    }
  }
}

std::optional<ErrorCode> check_sample(const StreamSample& sample, const ModelDims& dims) {
  if (sample.z.size() != dims.K || static_cast<Index>(sample.phi.size()) != dims.K) {
    return ErrorCode::dimension_mismatch;
  }
  for (Index k = 0; k < dims.K; ++k) {
    const auto m = sample.phi[static_cast<std::size_t>(k)];
    if (m > 1) return ErrorCode::mask_value_not_binary;
    if (m == 0 && sample.z[k] != 0.0) return ErrorCode::nonzero_at_masked_position;
  }
  return std::nullopt;
}

void validate_sample(const StreamSample& sample, const ModelDims& dims) {
  if (auto err = check_sample(sample, dims)) {
    throw Error(*err, "invalid sample at index " + std::to_string(sample.index));
  }
}

std::size_t observed_count(const StreamSample& sample) noexcept {
  return static_cast<std::size_t>(
      std::count(sample.phi.begin(), sample.phi.end(), std::uint8_t{1}));
}

StreamSample make_sample(std::uint64_t index, const Vector& y, Mask phi) {
  StreamSample s;
  s.index = index;
  s.z = y;
  for (Index k = 0; k < y.size(); ++k) {
    if (phi[static_cast<std::size_t>(k)] == 0) s.z[k] = 0.0;
  }
  s.phi = std::move(phi);
  return s;
}

}  // namespace ovbsl
