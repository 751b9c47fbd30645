#ifndef OVBSL_DATAGEN_HPP
#define OVBSL_DATAGEN_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ovbsl/types.hpp"

namespace ovbsl {

/// Recipe for a synthetic low-rank stream.
struct ScenarioSpec {
  Index K = 500;
  Index r = 5;
  std::uint64_t n_samples = 20000;
  double beta_true = 1e3;                  // noise precision; the noise variance is 1 / beta_true
  double pi = 1.0;                         // observed fraction per sample
  std::optional<std::uint64_t> change_at;  // index from which U is redrawn
  double subspace_sparsity = 0.0;          // fraction of zeros per U column
  bool noiseless = false;
  std::uint64_t seed = 1;

  void validate() const;
  /// Observed entries per sample, ceil(pi * K).
  Index observed_per_sample() const;
};

struct GroundTruth {
  Matrix U;                  // K x r, active before change_at
  std::optional<Matrix> U2;  // K x r, active from change_at on
  Matrix C;                  // n x r coefficients
  Matrix Y;                  // n x K clean data
  std::vector<StreamSample> samples;

  /// Subspace in force at time `index` (1-based).
  const Matrix& subspace_at(std::uint64_t index, std::optional<std::uint64_t> change_at) const;
};

/// Draws a scenario. The draw order is fixed: U, then U2 (if any), then per
/// sample the coefficients, the noise and the mask.
GroundTruth gen_scenario(const ScenarioSpec& spec);

/// Generator for very long streams: yields one sample at a time without
/// materializing Y. Produces the same samples as gen_scenario.
class ScenarioStream {
 public:
  explicit ScenarioStream(const ScenarioSpec& spec);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  const Matrix& U() const noexcept { return U_; }
  const std::optional<Matrix>& U2() const noexcept { return U2_; }
  const Matrix& active_subspace() const noexcept;

  bool done() const noexcept { return next_index_ > spec_.n_samples; }

  struct Draw {
    StreamSample sample;
    Vector y;  // clean data
    Vector c;  // coefficients
  };
  Draw next();

 private:
  Matrix draw_subspace();

  ScenarioSpec spec_;
  std::mt19937_64 rng_;
  Matrix U_;
  std::optional<Matrix> U2_;
  std::uint64_t next_index_ = 1;
  std::vector<Index> perm_;
};

}  // namespace ovbsl

#endif  // OVBSL_DATAGEN_HPP
