#include "ovbsl/bayes_math.hpp"

#include <cmath>
#include <string>

namespace ovbsl {

namespace {

void require_scale(double v, const char* name) {
  if (!(v >= 1e-300)) {
    throw Error(ErrorCode::nonpositive_parameter, std::string(name) + " must be positive");
  }
  if (!(v <= 1e300)) {
    throw Error(ErrorCode::overflow, std::string(name) + " exceeds 1e300");
  }
}

}  // namespace

double gig_mean_half(double a, double b) {
  require_scale(a, "a");
  require_scale(b, "b");
  return std::sqrt(b / a);
}

double gig_mean_reciprocal_half(double a, double b) {
  require_scale(a, "a");
  require_scale(b, "b");
  return 1.0 / std::sqrt(b / a) + 1.0 / b;
}

double log_joint_prior(std::span<const double> x_col, std::span<const double> w_col, double delta,
                       double beta, std::span<const double> gamma_diag, double lambda) {
  require_scale(delta, "delta");
  require_scale(beta, "beta");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::nonpositive_parameter, "lambda must lie in (0, 1]");
  }
  if (gamma_diag.size() != w_col.size()) {
    throw Error(ErrorCode::dimension_mismatch, "gamma_diag and w_col lengths differ");
  }
  const auto n = static_cast<double>(x_col.size());
  const auto K = static_cast<double>(w_col.size());
  const double log_lambda = std::log(lambda);

  // x' Lambda x with weight lambda^{n-i} on entry i (1-based), and log|Lambda|.
  double quad = 0.0;
  double log_det = 0.0;
  for (std::size_t i = 0; i < x_col.size(); ++i) {
    const double expo = n - 1.0 - static_cast<double>(i);
    quad += std::exp(expo * log_lambda) * x_col[i] * x_col[i];
    log_det += expo * log_lambda;
  }
  for (std::size_t k = 0; k < w_col.size(); ++k) {
    require_scale(gamma_diag[k], "gamma");
    quad += gamma_diag[k] * w_col[k] * w_col[k];
    log_det += std::log(gamma_diag[k]);
  }

  constexpr double log_two_pi = 1.8378770664093454836;  // log(2 pi)
  return -0.5 * (n + K - 1.0) * log_two_pi + 0.5 * (n + K) * std::log(beta) + 0.5 * log_det -
         0.5 * std::log(delta) - std::sqrt(beta * delta) * std::sqrt(quad);
}

Matrix spd_solve(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || A.rows() != B.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "spd_solve shape mismatch");
  }
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::not_positive_definite, "Cholesky factorization failed");
  }
  Matrix X = llt.solve(B);
  if (!X.allFinite()) {
    throw Error(ErrorCode::not_positive_definite, "Cholesky solve produced non-finite values");
  }
  return X;
}

}  // namespace ovbsl
