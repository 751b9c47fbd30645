#include "ovbsl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ovbsl {

void ScenarioSpec::validate() const {
  if (r < 1 || r > K) {
    throw Error(ErrorCode::invalid_spec, "need 1 <= r <= K");
  }
  if (n_samples < 1) throw Error(ErrorCode::invalid_spec, "n_samples must be positive");
  if (!(pi > 0.0 && pi <= 1.0)) throw Error(ErrorCode::invalid_spec, "pi must lie in (0, 1]");
  if (!(subspace_sparsity >= 0.0 && subspace_sparsity < 1.0)) {
    throw Error(ErrorCode::invalid_spec, "subspace_sparsity must lie in [0, 1)");
  }
  if (!noiseless && !(beta_true > 0.0 && std::isfinite(beta_true))) {
    throw Error(ErrorCode::invalid_spec, "beta_true must be positive");
  }
  if (change_at && (*change_at < 2 || *change_at > n_samples)) {
    throw Error(ErrorCode::invalid_spec, "change_at must lie in [2, n_samples]");
  }
}

Index ScenarioSpec::observed_per_sample() const {
  // Guard against pi * K landing a hair above an integer through rounding.
  const double raw = pi * static_cast<double>(K);
  const double rounded = std::round(raw);
  const double count = std::abs(raw - rounded) < 1e-9 ? rounded : std::ceil(raw);
  return std::clamp<Index>(static_cast<Index>(count), 1, K);
}

ScenarioStream::ScenarioStream(const ScenarioSpec& spec) : spec_(spec), rng_(spec.seed) {
  spec_.validate();
  perm_.resize(static_cast<std::size_t>(spec_.K));
  U_ = draw_subspace();
  if (spec_.change_at) U2_ = draw_subspace();
}

Matrix ScenarioStream::draw_subspace() {
  const Index K = spec_.K;
  const Index r = spec_.r;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(K)));
  Matrix U(K, r);
  for (Index l = 0; l < r; ++l) {
    for (Index k = 0; k < K; ++k) U(k, l) = normal(rng_);
  }
  if (spec_.subspace_sparsity > 0.0) {
    const auto zeros =
        static_cast<Index>(std::ceil(spec_.subspace_sparsity * static_cast<double>(K) - 1e-9));
    for (Index l = 0; l < r; ++l) {
      std::iota(perm_.begin(), perm_.end(), Index{0});
      // Partial Fisher-Yates: the first `zeros` slots form a uniform subset.
      for (Index j = 0; j < zeros; ++j) {
        std::uniform_int_distribution<Index> pick(j, K - 1);
        std::swap(perm_[static_cast<std::size_t>(j)], perm_[static_cast<std::size_t>(pick(rng_))]);
        U(perm_[static_cast<std::size_t>(j)], l) = 0.0;
      }
    }
  }
  return U;
}

const Matrix& ScenarioStream::active_subspace() const noexcept {
  if (U2_ && spec_.change_at && next_index_ > *spec_.change_at) return *U2_;
  return U_;
}

ScenarioStream::Draw ScenarioStream::next() {
  if (done()) throw Error(ErrorCode::invalid_spec, "scenario stream exhausted");
  const Index K = spec_.K;
  const Index r = spec_.r;
  const std::uint64_t index = next_index_;
  const bool changed = spec_.change_at && index >= *spec_.change_at;
  const Matrix& U = changed ? *U2_ : U_;

  Draw d;
  std::normal_distribution<double> unit(0.0, 1.0);
  d.c.resize(r);
  for (Index l = 0; l < r; ++l) d.c[l] = unit(rng_);
  d.y = U * d.c;

  Vector yn = d.y;
  if (!spec_.noiseless) {
    std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(spec_.beta_true));
    for (Index k = 0; k < K; ++k) yn[k] += noise(rng_);
  }

  Mask phi(static_cast<std::size_t>(K), 0);
  const Index m = spec_.observed_per_sample();
  if (m == K) {
    std::fill(phi.begin(), phi.end(), std::uint8_t{1});
  } else {
    std::iota(perm_.begin(), perm_.end(), Index{0});
    for (Index j = 0; j < m; ++j) {
      std::uniform_int_distribution<Index> pick(j, K - 1);
      std::swap(perm_[static_cast<std::size_t>(j)], perm_[static_cast<std::size_t>(pick(rng_))]);
      phi[static_cast<std::size_t>(perm_[static_cast<std::size_t>(j)])] = 1;
    }
  }
  d.sample = make_sample(index, yn, std::move(phi));
  ++next_index_;
  return d;
}

const Matrix& GroundTruth::subspace_at(std::uint64_t index,
                                       std::optional<std::uint64_t> change_at) const {
  if (U2 && change_at && index >= *change_at) return *U2;
  return U;
}

GroundTruth gen_scenario(const ScenarioSpec& spec) {
  ScenarioStream stream(spec);
  GroundTruth gt;
  gt.U = stream.U();
  gt.U2 = stream.U2();
  const auto n = static_cast<Index>(spec.n_samples);
  gt.C.resize(n, spec.r);
  gt.Y.resize(n, spec.K);
  gt.samples.reserve(spec.n_samples);
  for (Index i = 0; i < n; ++i) {
    auto d = stream.next();
    gt.C.row(i) = d.c.transpose();
    gt.Y.row(i) = d.y.transpose();
    gt.samples.push_back(std::move(d.sample));
  }
  return gt;
}

}  // namespace ovbsl
