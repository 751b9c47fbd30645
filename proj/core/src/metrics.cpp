#include "ovbsl/metrics.hpp"

#include <cmath>

namespace ovbsl {

void MetricTrace::push(std::uint64_t index, double value) {
  if (!values.empty() && index <= values.back().first) {
    throw Error(ErrorCode::format_error, "trace '" + name + "' indices must increase");
  }
  values.emplace_back(index, value);
}

double normalized_error(const Vector& y_true, const Vector& y_hat) {
  if (y_true.size() != y_hat.size()) {
    throw Error(ErrorCode::shape_mismatch, "reconstruction length differs from truth");
  }
  const double denom = y_true.norm();
  if (denom == 0.0) return -1.0;
  return (y_hat - y_true).norm() / denom;
}

double NraeeAccumulator::update(const Vector& y_true, const Vector& y_hat) {
  const double e = normalized_error(y_true, y_hat);
  if (e < 0.0) {
    ++skipped;
  } else {
    sum += e;
    ++count;
  }
  return value();
}

Matrix orthonormal_basis(const Matrix& A, double drop_tol) {
  Matrix Q(A.rows(), A.cols());
  Index kept = 0;
  for (Index j = 0; j < A.cols(); ++j) {
    Vector v = A.col(j);
    const double original = v.norm();
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < kept; ++i) v -= Q.col(i).dot(v) * Q.col(i);
    }
    const double residual = v.norm();
    if (residual < drop_tol * original) continue;
    Q.col(kept++) = v / residual;
  }
  return Q.leftCols(kept);
}

double nsre(const Matrix& w_hat, const Matrix& u_true, double rel_threshold) {
  if (w_hat.rows() != u_true.rows()) {
    throw Error(ErrorCode::shape_mismatch, "estimated and true subspaces differ in K");
  }
  const double u_norm = u_true.norm();
  if (u_norm == 0.0) throw Error(ErrorCode::invalid_spec, "true subspace is zero");

  const Vector norms = w_hat.colwise().norm().transpose();
  const double top = norms.size() ? norms.maxCoeff() : 0.0;
  if (!(top > 0.0)) return 1.0;

  Matrix active(w_hat.rows(), w_hat.cols());
  Index m = 0;
  for (Index l = 0; l < w_hat.cols(); ++l) {
    if (norms[l] > rel_threshold * top) active.col(m++) = w_hat.col(l);
  }
  const Matrix Q = orthonormal_basis(active.leftCols(m));
  if (Q.cols() == 0) return 1.0;
  const Matrix residual = u_true - Q * (Q.transpose() * u_true);
  return residual.norm() / u_norm;
}

Vector residual_map(const Matrix& y_true, const Matrix& y_hat) {
  if (y_true.rows() != y_hat.rows() || y_true.cols() != y_hat.cols()) {
    throw Error(ErrorCode::shape_mismatch, "residual_map inputs differ in shape");
  }
  if (y_true.rows() == 0) return Vector::Zero(y_true.cols());
  return (y_true - y_hat).cwiseAbs().colwise().mean().transpose();
}

}  // namespace ovbsl
