#ifndef OVBSL_METRICS_HPP
#define OVBSL_METRICS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ovbsl/types.hpp"

namespace ovbsl {

struct MetricTrace {
  std::string name;
  std::vector<std::pair<std::uint64_t, double>> values;  // strictly increasing indices

  void push(std::uint64_t index, double value);
};

/// Running mean of ||y_hat - y|| / ||y||. Samples with ||y|| == 0 are skipped
/// and counted.
struct NraeeAccumulator {
  double sum = 0.0;
  std::uint64_t count = 0;
  std::uint64_t skipped = 0;

  /// Adds one sample and returns the current running average.
  double update(const Vector& y_true, const Vector& y_hat);
  double value() const noexcept { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

/// Per-sample normalized reconstruction error ||y_hat - y|| / ||y||, or a
/// negative value when ||y|| == 0.
double normalized_error(const Vector& y_true, const Vector& y_hat);

/// Orthonormal basis of span(A) by modified Gram-Schmidt with one
/// reorthogonalization pass. Columns whose residual falls below `drop_tol`
/// times their original norm are discarded.
Matrix orthonormal_basis(const Matrix& A, double drop_tol = 1e-10);

/// ||U - Q Q^T U||_F / ||U||_F where Q spans the active columns of w_hat
/// (norm above rel_threshold times the largest). Returns 1 when no column is
/// active.
double nsre(const Matrix& w_hat, const Matrix& u_true, double rel_threshold = 1e-3);

/// Mean absolute difference per coordinate (column) over the sample axis.
Vector residual_map(const Matrix& y_true, const Matrix& y_hat);

}  // namespace ovbsl

#endif  // OVBSL_METRICS_HPP
