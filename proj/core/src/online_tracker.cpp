#include "ovbsl/online_tracker.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ovbsl/bayes_math.hpp"

namespace ovbsl {

namespace {

using u64 = std::uint64_t;

u64 to_u64(Index v) { return static_cast<u64>(v); }

void add_flops(TrackerState& state, u64 flops) {
  state.diagnostics.step_flops += flops;
  state.diagnostics.total_flops += flops;
}

}  // namespace

std::size_t TrackerState::state_bytes() const noexcept {
  const auto K = static_cast<std::size_t>(dims.K);
  const auto L = static_cast<std::size_t>(dims.L);
  // w_mean, w_var, gamma, rho, r_diag, T: K*L each; s, delta: L; Q and P_k: L*L;
  // d: K; beta and n.
  return sizeof(double) * (6 * K * L + 2 * L + (K + 1) * L * L + K + 1) + sizeof(std::uint64_t);
}

double effective_window(const TrackerState& state) noexcept {
  if (state.hp.lambda >= 1.0) return static_cast<double>(state.n);
  return 1.0 / (1.0 - state.hp.lambda);
}

TrackerState init_state(const ModelDims& dims, const HyperParams& hp, std::uint64_t seed,
                        TrackerOptions options) {
  dims.validate();
  hp.validate();
  if (options.inner_sweeps < 1) {
    throw Error(ErrorCode::config_error, "inner_sweeps must be at least 1");
  }
  if (options.initial_w_var && !(*options.initial_w_var > 0.0)) {
    throw Error(ErrorCode::nonpositive_parameter, "initial_w_var must be positive");
  }
  const Index K = dims.K;
  const Index L = dims.L;

  TrackerState st;
  st.dims = dims;
  st.hp = hp;
  st.options = options;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(K)));
  st.w_mean.resize(K, L);
  // Column-major fill so that the draw order is fixed by (l, k).
  for (Index l = 0; l < L; ++l) {
    for (Index k = 0; k < K; ++k) st.w_mean(k, l) = normal(rng);
  }
  const double w_var0 = options.initial_w_var.value_or(1.0 / static_cast<double>(K));
  st.w_var = Matrix::Constant(K, L, clamp_scale(w_var0));
  st.s = Vector::Ones(L);
  st.delta = Vector::Ones(L);
  st.gamma = Matrix::Ones(K, L);
  st.rho = Matrix::Ones(K, L);
  st.beta = 1.0;
  st.stats.T = Matrix::Zero(L, K);
  st.stats.Q = Matrix::Zero(L, L);
  st.stats.P.assign(static_cast<std::size_t>(K), Matrix::Zero(L, L));
  st.stats.d = Vector::Zero(K);
  st.r_diag = Matrix::Zero(K, L);
  st.n = 0;
  return st;
}

CoefficientEstimate infer_coefficients(TrackerState& state, const StreamSample& sample) {
  const Index K = state.dims.K;
  const Index L = state.dims.L;
  validate_sample(sample, state.dims);

  // Precision (up to the factor beta): W^T Phi W + sum_k phi_k Sigma_w_k + S.
  Matrix A = state.s.asDiagonal();
  Vector rhs = Vector::Zero(L);
  u64 observed = 0;
  for (Index k = 0; k < K; ++k) {
    if (sample.phi[static_cast<std::size_t>(k)] == 0) continue;
    ++observed;
    const auto w = state.w_mean.row(k);
    A.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
    A.diagonal() += state.w_var.row(k).transpose();
    rhs.noalias() += w.transpose() * sample.z[k];
  }
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();

  Matrix B(L, L + 1);
  B.col(0) = rhs;
  B.rightCols(L).setIdentity();

  Matrix sol;
  try {
    sol = spd_solve(A, B);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::not_positive_definite) throw;
    ++state.diagnostics.jitter_retries;
    A.diagonal().array() += 1e-10 * A.trace() / static_cast<double>(L);
    sol = spd_solve(A, B);
  }

  CoefficientEstimate est;
  // x = beta * Sigma * W^T z = A^{-1} W^T z.
  est.x_mean = sol.col(0);
  est.x_cov = sol.rightCols(L) / state.beta;
  est.x_cov = 0.5 * (est.x_cov + est.x_cov.transpose()).eval();
  est.second_moment = est.x_cov;
  est.second_moment.noalias() += est.x_mean * est.x_mean.transpose();

  const u64 l = to_u64(L);
  add_flops(state, observed * (l * (l + 1) + l + 2 * l)       // rank-1 updates, variances, W^T z
                       + l * l * l / 3 + 2 * l * l * (l + 1)  // Cholesky and solves
                       + 3 * l * l);                          // scaling and second moment
  return est;
}

void update_statistics(TrackerState& state, const StreamSample& sample,
                       const CoefficientEstimate& coeff) {
  const Index K = state.dims.K;
  const Index L = state.dims.L;
  const double lambda = state.hp.lambda;
  auto& st = state.stats;

  u64 observed = 0;
  for (Index k = 0; k < K; ++k) {
    auto& Pk = st.P[static_cast<std::size_t>(k)];
    st.T.col(k) *= lambda;
    Pk *= lambda;
    st.d[k] *= lambda;
    if (sample.phi[static_cast<std::size_t>(k)] != 0) {
      ++observed;
      st.T.col(k).noalias() += coeff.x_mean * sample.z[k];
      Pk += coeff.second_moment;
      st.d[k] += sample.z[k] * sample.z[k];
    }
  }
  st.Q *= lambda;
  st.Q += coeff.second_moment;

  const u64 k64 = to_u64(K);
  const u64 l = to_u64(L);
  add_flops(state, k64 * (l + l * l + 1)                 // decay of T, P_k, d
                       + observed * (2 * l + l * l + 2)  // observed contributions
                       + 2 * l * l);                     // Q
}

void update_subspace_row(TrackerState& state, Index k) {
  const Index L = state.dims.L;
  const auto& Pk = state.stats.P[static_cast<std::size_t>(k)];
  const double beta = state.beta;

  for (Index l = 0; l < L; ++l) {
    state.r_diag(k, l) = Pk(l, l) + state.gamma(k, l) * state.s[l];
  }

  for (int sweep = 0; sweep < state.options.inner_sweeps; ++sweep) {
    for (Index l = 0; l < L; ++l) {
      const double r_ll = state.r_diag(k, l);
      if (!(r_ll > 1e-300)) {
        throw Error(
            ErrorCode::division_underflow,
            "r_{k,ll} collapsed at row " + std::to_string(k) + ", column " + std::to_string(l));
      }
      // w_{k,not l} mixes entries already updated in this sweep (< l) with the
      // previous values (> l); off-diagonal R_k entries equal those of P_k.
      double cross = Pk.row(l).dot(state.w_mean.row(k)) - Pk(l, l) * state.w_mean(k, l);
      const double var = 1.0 / (beta * r_ll);
      state.w_mean(k, l) = beta * var * (state.stats.T(l, k) - cross);
      state.w_var(k, l) = clamp_scale(var);
    }
  }

  const u64 l = to_u64(L);
  add_flops(state, 2 * l + static_cast<u64>(state.options.inner_sweeps) * l * (2 * l + 6));
}

void update_subspace(TrackerState& state) {
  for (Index k = 0; k < state.dims.K; ++k) update_subspace_row(state, k);
}

void update_element_scales_row(TrackerState& state, Index k) {
  if (!state.hp.sparse_subspace) return;
  const auto& hp = state.hp;
  const Index L = state.dims.L;
  for (Index l = 0; l < L; ++l) {
    const double rho_new =
        2.0 * (hp.psi + 1.0) / (2.0 * hp.xi + 1.0 / state.gamma(k, l) + 1.0 / state.rho(k, l));
    const double w2 = state.w_mean(k, l) * state.w_mean(k, l) + state.w_var(k, l);
    const double denom = state.beta * state.s[l] * w2;
    double gamma_new = kScaleCeil;
    if (denom > 0.0) gamma_new = std::sqrt(rho_new / denom);
    state.rho(k, l) = clamp_scale(rho_new);
    state.gamma(k, l) = clamp_scale(gamma_new);
  }
  add_flops(state, 14 * to_u64(L));
}

void update_element_scales(TrackerState& state) {
  for (Index k = 0; k < state.dims.K; ++k) update_element_scales_row(state, k);
}

void update_column_scales(TrackerState& state) {
  const auto& hp = state.hp;
  const Index K = state.dims.K;
  const Index L = state.dims.L;
  const double window = effective_window(state);
  const double numer = 2.0 * hp.mu + window + static_cast<double>(K) + 1.0;

  for (Index l = 0; l < L; ++l) {
    const double delta_new = numer / (2.0 * hp.nu + 1.0 / state.s[l] + 1.0 / state.delta[l]);
    double energy = state.stats.Q(l, l);
    for (Index k = 0; k < K; ++k) {
      const double w = state.w_mean(k, l);
      energy += state.gamma(k, l) * (w * w + state.w_var(k, l));
    }
    if (!(delta_new > 0.0)) {
      throw Error(ErrorCode::nonpositive_parameter, "delta update became nonpositive");
    }
    double s_new = kScaleCeil;
    if (energy > 0.0) s_new = std::sqrt(delta_new / (state.beta * energy));
    state.delta[l] = clamp_scale(delta_new);
    state.s[l] = clamp_scale(s_new);
  }
  add_flops(state, to_u64(L) * (4 * to_u64(K) + 12));
}

void update_noise_precision(TrackerState& state) {
  const auto& hp = state.hp;
  const Index K = state.dims.K;
  const Index L = state.dims.L;
  const auto& st = state.stats;
  const double Kd = static_cast<double>(K);
  const double Ld = static_cast<double>(L);

  const double numer = 2.0 * hp.kappa + effective_window(state) * (Kd + Ld) + Kd * Ld;
  double denom = 2.0 * hp.theta;
  for (Index k = 0; k < K; ++k) {
    denom += st.d[k] - state.w_mean.row(k).dot(st.T.col(k).transpose()) +
             state.w_var.row(k).dot(state.r_diag.row(k));
  }
  for (Index l = 0; l < L; ++l) denom += state.s[l] * st.Q(l, l);

  if (!(denom > kScaleFloor)) {
    ++state.diagnostics.beta_denominator_clamps;
    denom = kScaleFloor;
  }
  state.beta = clamp_scale(numer / denom);
  add_flops(state, 4 * to_u64(K) * to_u64(L) + 2 * to_u64(K) + 2 * to_u64(L) + 8);
}

StepResult step(TrackerState& state, const StreamSample& sample) {
  if (sample.index != state.n + 1) {
    throw Error(ErrorCode::format_error, "expected sample index " + std::to_string(state.n + 1) +
                                             ", got " + std::to_string(sample.index));
  }
  state.diagnostics.step_flops = 0;

  StepResult out;
  out.coeff = infer_coefficients(state, sample);
  state.n = sample.index;
  update_statistics(state, sample, out.coeff);
  for (Index k = 0; k < state.dims.K; ++k) {
    update_subspace_row(state, k);
    update_element_scales_row(state, k);
  }
  update_column_scales(state);
  update_noise_precision(state);

  out.reconstruction.noalias() = state.w_mean * out.coeff.x_mean;
  add_flops(state, 2 * to_u64(state.dims.K) * to_u64(state.dims.L));
  return out;
}

Index effective_rank(const Matrix& w_mean, double rel_threshold) {
  if (w_mean.cols() == 0) return 0;
  const Vector norms = w_mean.colwise().norm().transpose();
  const double top = norms.maxCoeff();
  if (!(top > 0.0)) return 0;
  Index count = 0;
  for (Index l = 0; l < norms.size(); ++l) {
    if (norms[l] > rel_threshold * top) ++count;
  }
  return count;
}

}  // namespace ovbsl
