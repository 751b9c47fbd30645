#include "ovbsl/batch_vb.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ovbsl/bayes_math.hpp"

namespace ovbsl {

namespace {

// Weighted masked coefficient moments of row k: P_k and t_k.
void row_moments(const BatchDataset& data, const BatchPosterior& post, const Vector& weights,
                 Index k, Matrix& Pk, Vector& tk) {
  const Index L = post.w_mean.cols();
  Pk.setZero(L, L);
  tk.setZero(L);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& smp = data.samples[i];
    if (smp.phi[static_cast<std::size_t>(k)] == 0) continue;
    const auto x = post.x_mean.row(static_cast<Index>(i)).transpose();
    const double wi = weights[static_cast<Index>(i)];
    Pk.noalias() += wi * (post.x_cov[i] + x * x.transpose());
    tk.noalias() += wi * smp.z[k] * x;
  }
}

// <x_l^T Lambda x_l> for every column l.
Vector coefficient_energy(const BatchPosterior& post, const Vector& weights) {
  const Index L = post.x_mean.cols();
  Vector e = Vector::Zero(L);
  for (Index i = 0; i < post.x_mean.rows(); ++i) {
    const auto& cov = post.x_cov[static_cast<std::size_t>(i)];
    for (Index l = 0; l < L; ++l) {
      const double x = post.x_mean(i, l);
      e[l] += weights[i] * (x * x + cov(l, l));
    }
  }
  return e;
}

}  // namespace

Vector sample_weights(std::size_t n, double lambda) {
  Vector w(static_cast<Index>(n));
  double v = 1.0;
  for (Index i = static_cast<Index>(n) - 1; i >= 0; --i) {
    w[i] = v;
    v *= lambda;
  }
  return w;
}

BatchPosterior init_batch_posterior(const BatchDataset& data, std::uint64_t seed) {
  const Index K = data.dims.K;
  const Index L = data.dims.L;
  const auto n = static_cast<Index>(data.size());
  BatchPosterior post;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(K)));
  post.w_mean.resize(K, L);
  for (Index l = 0; l < L; ++l) {
    for (Index k = 0; k < K; ++k) post.w_mean(k, l) = normal(rng);
  }
  post.w_var = Matrix::Ones(K, L);
  post.s = Vector::Ones(L);
  post.delta = Vector::Ones(L);
  post.gamma = Matrix::Ones(K, L);
  post.rho = Matrix::Ones(K, L);
  post.beta = 1.0;
  post.x_mean = Matrix::Zero(n, L);
  post.x_cov.assign(static_cast<std::size_t>(n), Matrix::Identity(L, L));
  return post;
}

void batch_update_coefficients(const BatchDataset& data, BatchPosterior& post,
                               const HyperParams& /*hp*/) {
  const Index K = data.dims.K;
  const Index L = post.w_mean.cols();
  const auto n = static_cast<Index>(data.size());
  post.x_mean.resize(n, L);
  post.x_cov.resize(static_cast<std::size_t>(n));

  Matrix B(L, L + 1);
  for (Index i = 0; i < n; ++i) {
    const auto& smp = data.samples[static_cast<std::size_t>(i)];
    Matrix A = post.s.asDiagonal();
    Vector rhs = Vector::Zero(L);
    for (Index k = 0; k < K; ++k) {
      if (smp.phi[static_cast<std::size_t>(k)] == 0) continue;
      const auto w = post.w_mean.row(k).transpose();
      A.noalias() += w * w.transpose();
      A.diagonal() += post.w_var.row(k).transpose();
      rhs.noalias() += smp.z[k] * w;
    }
    B.col(0) = rhs;
    B.rightCols(L).setIdentity();
    const Matrix sol = spd_solve(A, B);
    post.x_mean.row(i) = sol.col(0).transpose();
    Matrix cov = sol.rightCols(L) / post.beta;
    post.x_cov[static_cast<std::size_t>(i)] = 0.5 * (cov + cov.transpose());
  }
}

void batch_update_subspace(const BatchDataset& data, BatchPosterior& post, const HyperParams& hp) {
  const Index K = post.w_mean.rows();
  const Index L = post.w_mean.cols();
  const Vector weights = sample_weights(data.size(), hp.lambda);
  const double beta = post.beta;

  Matrix Pk;
  Vector tk;
  for (Index k = 0; k < K; ++k) {
    row_moments(data, post, weights, k, Pk, tk);
    for (Index l = 0; l < L; ++l) {
      const double precision = Pk(l, l) + post.gamma(k, l) * post.s[l];
      if (!(beta * precision > 1e-300)) {
        throw Error(ErrorCode::division_underflow, "subspace precision collapsed at (" +
                                                       std::to_string(k) + ", " +
                                                       std::to_string(l) + ")");
      }
      const double var = 1.0 / (beta * precision);
      double cross = 0.0;
      for (Index j = 0; j < L; ++j) {
        if (j != l) cross += Pk(l, j) * post.w_mean(k, j);
      }
      post.w_mean(k, l) = beta * var * (tk[l] - cross);
      post.w_var(k, l) = clamp_scale(var);
    }
  }
}

void batch_update_column_scales(BatchPosterior& post, const HyperParams& hp) {
  const Index K = post.w_mean.rows();
  const Index L = post.w_mean.cols();
  const auto n = static_cast<std::size_t>(post.x_mean.rows());
  const Vector weights = sample_weights(n, hp.lambda);
  const Vector xx = coefficient_energy(post, weights);
  const double shape = hp.mu + (static_cast<double>(n) + static_cast<double>(K) + 1.0) / 2.0;

  for (Index l = 0; l < L; ++l) {
    double ww = 0.0;
    for (Index k = 0; k < K; ++k) {
      const double w = post.w_mean(k, l);
      ww += post.gamma(k, l) * (w * w + post.w_var(k, l));
    }
    const double s_old = post.s[l];
    const double delta_old = post.delta[l];
    const double s_new = gig_mean_half(post.beta * (ww + xx[l]), delta_old);
    const double inv_s = 1.0 / s_old + 1.0 / delta_old;
    const double delta_new = shape / (hp.nu + 0.5 * inv_s);
    post.s[l] = clamp_scale(s_new);
    post.delta[l] = clamp_scale(delta_new);
  }
}

void batch_update_element_scales(BatchPosterior& post, const HyperParams& hp) {
  if (!hp.sparse_subspace) return;
  const Index K = post.w_mean.rows();
  const Index L = post.w_mean.cols();
  for (Index k = 0; k < K; ++k) {
    for (Index l = 0; l < L; ++l) {
      const double w = post.w_mean(k, l);
      const double a = post.beta * post.s[l] * (w * w + post.w_var(k, l));
      const double gamma_old = post.gamma(k, l);
      const double rho_old = post.rho(k, l);
      const double gamma_new = gig_mean_half(a, rho_old);
      const double inv_gamma = 1.0 / gamma_old + 1.0 / rho_old;
      post.gamma(k, l) = clamp_scale(gamma_new);
      post.rho(k, l) = clamp_scale((hp.psi + 1.0) / (hp.xi + 0.5 * inv_gamma));
    }
  }
}

void batch_update_noise(const BatchDataset& data, BatchPosterior& post, const HyperParams& hp) {
  const Index K = post.w_mean.rows();
  const Index L = post.w_mean.cols();
  const std::size_t n = data.size();
  const Vector weights = sample_weights(n, hp.lambda);
  const double Kd = static_cast<double>(K);
  const double Ld = static_cast<double>(L);
  const double shape = hp.kappa + (static_cast<double>(n) * (Kd + Ld) + Kd * Ld) / 2.0;

  double sum = 0.0;
  Matrix cov_k(L, L);
  for (Index k = 0; k < K; ++k) {
    const auto w = post.w_mean.row(k).transpose();
    const auto sigma = post.w_var.row(k).transpose();
    double resid = 0.0;
    cov_k.setZero();
    Vector xx_k = Vector::Zero(L);  // sum_i lambda^{n-i} phi_ik x_il^2
    for (std::size_t i = 0; i < n; ++i) {
      const auto& smp = data.samples[i];
      const auto x = post.x_mean.row(static_cast<Index>(i)).transpose();
      const double wi = weights[static_cast<Index>(i)];
      const bool obs = smp.phi[static_cast<std::size_t>(k)] != 0;
      const double fit = obs ? x.dot(w) : 0.0;
      resid += wi * (smp.z[k] - fit) * (smp.z[k] - fit);
      if (obs) {
        cov_k.noalias() += wi * post.x_cov[i];
        xx_k.array() += wi * x.array().square();
      }
    }
    const double trace_x = sigma.dot(xx_k);
    const double quad = w.dot(cov_k * w);
    const double trace_cov = sigma.dot(cov_k.diagonal());
    double prior_w = 0.0;
    for (Index l = 0; l < L; ++l) {
      prior_w += post.s[l] * post.gamma(k, l) * (w[l] * w[l] + sigma[l]);
    }
    sum += resid + trace_x + quad + trace_cov + prior_w;
  }
  const Vector xx = coefficient_energy(post, weights);
  sum += post.s.dot(xx);

  const double rate = hp.theta + 0.5 * sum;
  if (!(rate > 0.0)) {
    throw Error(ErrorCode::nonpositive_denominator, "noise posterior rate is not positive");
  }
  post.beta = clamp_scale(shape / rate);
}

BatchFitResult batch_fit(const BatchDataset& data, const HyperParams& hp,
                         const BatchOptions& options) {
  data.validate();
  hp.validate();
  if (data.size() == 0) throw Error(ErrorCode::invalid_spec, "empty dataset");

  BatchFitResult result;
  result.posterior = init_batch_posterior(data, options.seed);
  auto& post = result.posterior;

  for (int it = 0; it < options.max_iters; ++it) {
    const Matrix w_prev = post.w_mean;
    batch_update_coefficients(data, post, hp);
    batch_update_subspace(data, post, hp);
    batch_update_column_scales(post, hp);
    batch_update_element_scales(post, hp);
    batch_update_noise(data, post, hp);
    result.iterations = it + 1;

    const double change =
        ((post.w_mean - w_prev).array().abs() / (1e-12 + post.w_mean.array().abs())).maxCoeff();
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ovbsl
