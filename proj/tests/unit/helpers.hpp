#ifndef OVBSL_TESTS_HELPERS_HPP
#define OVBSL_TESTS_HELPERS_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "ovbsl/types.hpp"

namespace testutil {

using ovbsl::Index;
using ovbsl::Matrix;
using ovbsl::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) M(i, j) = nd(rng);
  }
  return M;
}

inline Matrix random_spd(Index n, std::mt19937_64& rng, double ridge = 1.0) {
  const Matrix G = random_matrix(n, n, rng);
  return G * G.transpose() + ridge * Matrix::Identity(n, n);
}

/// Sample with each entry observed with probability pi.
inline ovbsl::StreamSample random_sample(std::uint64_t index, Index K, double pi,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::bernoulli_distribution keep(pi);
  Vector y(K);
  ovbsl::Mask phi(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) {
    y[k] = nd(rng);
    phi[static_cast<std::size_t>(k)] = keep(rng) ? 1 : 0;
  }
  return ovbsl::make_sample(index, y, phi);
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ovbsl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#endif  // OVBSL_TESTS_HELPERS_HPP
