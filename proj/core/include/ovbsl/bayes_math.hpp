#ifndef OVBSL_BAYES_MATH_HPP
#define OVBSL_BAYES_MATH_HPP

#include <span>

#include "ovbsl/types.hpp"

namespace ovbsl {

/// Scale parameters (s, delta, gamma, rho, beta) and posterior variances are
/// kept inside this range after every update.
inline constexpr double kScaleFloor = 1e-12;
inline constexpr double kScaleCeil = 1e12;

inline double clamp_scale(double v) noexcept {
  return v < kScaleFloor ? kScaleFloor : (v > kScaleCeil ? kScaleCeil : v);
}

struct GigParams {
  double p = -0.5;
  double a = 1.0;
  double b = 1.0;
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const noexcept { return shape / rate; }
};

/// Mean of GIG(-1/2, a, b): sqrt(b / a).
double gig_mean_half(double a, double b);

/// E[1/x] under GIG(-1/2, a, b): sqrt(a / b) + 1 / b. Equal to
/// 1 / gig_mean_half(a, b) + 1 / b.
double gig_mean_reciprocal_half(double a, double b);

/// Log of the joint prior of one column pair (x_l, w_l) after integrating out
/// the column scale s_l:
///
///   (2 pi)^{-(n+K-1)/2} beta^{(n+K)/2} |Lambda Gamma_l|^{1/2} delta^{-1/2}
///     * exp(-sqrt(beta delta) * sqrt(x' Lambda x + w' Gamma_l w))
///
/// with Lambda = diag(lambda^{n-1}, ..., lambda, 1) over the n entries of x.
double log_joint_prior(std::span<const double> x_col, std::span<const double> w_col, double delta,
                       double beta, std::span<const double> gamma_diag, double lambda);

/// Solves A X = B for symmetric positive-definite A via a Cholesky factorization.
/// Throws not-positive-definite when the factorization fails.
Matrix spd_solve(const Matrix& A, const Matrix& B);

}  // namespace ovbsl

#endif  // OVBSL_BAYES_MATH_HPP
