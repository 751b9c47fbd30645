#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dense.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "ovbsl/batch_vb.hpp"
#include "ovbsl/datagen.hpp"
#include "ovbsl/online_tracker.hpp"

using namespace ovbsl;

namespace {

BatchDataset random_dataset(Index K, Index L, std::size_t n, double pi, std::mt19937_64& rng) {
  BatchDataset data;
  data.dims = {K, L};
  for (std::size_t i = 1; i <= n; ++i)
    data.samples.push_back(testutil::random_sample(i, K, pi, rng));
  return data;
}

// Posterior with every factor populated by random but valid values.
BatchPosterior random_posterior(const BatchDataset& data, std::mt19937_64& rng) {
  const Index K = data.dims.K;
  const Index L = data.dims.L;
  const auto n = static_cast<Index>(data.size());
  std::uniform_real_distribution<double> pos(0.3, 2.5);
  BatchPosterior post;
  post.x_mean = testutil::random_matrix(n, L, rng);
  for (Index i = 0; i < n; ++i) post.x_cov.push_back(0.2 * testutil::random_spd(L, rng, 0.5));
  post.w_mean = testutil::random_matrix(K, L, rng);
  post.w_var.resize(K, L);
  post.gamma.resize(K, L);
  post.rho.resize(K, L);
  for (Index k = 0; k < K; ++k) {
    for (Index l = 0; l < L; ++l) {
      post.w_var(k, l) = 0.1 * pos(rng);
      post.gamma(k, l) = pos(rng);
      post.rho(k, l) = pos(rng);
    }
  }
  post.s.resize(L);
  post.delta.resize(L);
  for (Index l = 0; l < L; ++l) {
    post.s[l] = pos(rng);
    post.delta[l] = pos(rng);
  }
  post.beta = pos(rng);
  return post;
}

double weight(std::size_t n, std::size_t i, double lambda) {
  return std::pow(lambda, static_cast<double>(n - 1 - i));
}

BatchDataset dataset_from(const GroundTruth& gt, Index L) {
  BatchDataset data;
  data.dims = {gt.Y.cols(), L};
  data.samples = gt.samples;
  return data;
}

double reconstruction_error(const BatchPosterior& post, const Matrix& Y) {
  return (Y - post.x_mean * post.w_mean.transpose()).norm() / Y.norm();
}

}  // namespace

TEST_SUITE("batch_vb") {

TEST_CASE("sample weights") {
  const Vector w = sample_weights(3, 0.5);
  CHECK(w[0] == 0.25);
  CHECK(w[1] == 0.5);
  CHECK(w[2] == 1.0);
  CHECK(sample_weights(4, 1.0).isOnes());
}

TEST_CASE("coefficient update examples") {
  BatchDataset data;
  data.dims = {1, 1};
  data.samples.push_back({Vector::Constant(1, 2.0), {1}, 1});
  BatchPosterior post = init_batch_posterior(data, 1);
  post.w_mean(0, 0) = 1.0;
  post.w_var(0, 0) = 0.0;
  HyperParams hp;
  batch_update_coefficients(data, post, hp);
  CHECK(post.x_cov[0](0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.x_mean(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  BatchDataset empty;
  empty.dims = {4, 2};
  empty.samples.push_back({Vector::Zero(4), Mask(4, 0), 1});
  BatchPosterior p2 = init_batch_posterior(empty, 2);
  p2.s << 2.0, 5.0;
  p2.beta = 4.0;
  batch_update_coefficients(empty, p2, hp);
  CHECK(p2.x_mean.isZero());
  CHECK(p2.x_cov[0](0, 0) == doctest::Approx(1.0 / 8.0));
  CHECK(p2.x_cov[0](1, 1) == doctest::Approx(1.0 / 20.0));
  CHECK(p2.x_cov[0](0, 1) == 0.0);
}

TEST_CASE("coefficient update matches the dense oracle") {
  std::mt19937_64 rng(61);
  const auto data = random_dataset(6, 3, 5, 0.6, rng);
  auto post = random_posterior(data, rng);
  HyperParams hp;
  batch_update_coefficients(data, post, hp);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& smp = data.samples[i];
    const auto ref =
        oracle::coefficients(post.w_mean, post.w_var, post.s, post.beta, smp.z, smp.phi);
    CHECK(testutil::rel_diff(post.x_mean.row(static_cast<Index>(i)).transpose(), ref.mean) < 1e-10);
    CHECK(testutil::rel_diff(post.x_cov[i], ref.cov) < 1e-10);
  }
}

TEST_CASE("subspace update examples") {
  BatchDataset data;
  data.dims = {1, 1};
  data.samples.push_back({Vector::Constant(1, 4.0), {1}, 1});
  BatchPosterior post = init_batch_posterior(data, 1);
  post.x_mean(0, 0) = 2.0;
  post.x_cov[0](0, 0) = 0.0;
  HyperParams hp;
  hp.lambda = 1.0;
  batch_update_subspace(data, post, hp);
  CHECK(post.w_var(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(post.w_mean(0, 0) == doctest::Approx(1.6).epsilon(1e-15));

  // Column with zero coefficients: only the prior precision is left.
  std::mt19937_64 rng(3);
  auto d2 = random_dataset(4, 2, 3, 1.0, rng);
  auto p2 = random_posterior(d2, rng);
  p2.x_mean.col(1).setZero();
  for (auto& c : p2.x_cov) c.setZero();
  const Matrix gamma = p2.gamma;
  const Vector s = p2.s;
  const double beta = p2.beta;
  batch_update_subspace(d2, p2, hp);
  for (Index k = 0; k < 4; ++k) {
    CHECK(p2.w_var(k, 1) == doctest::Approx(1.0 / (beta * gamma(k, 1) * s[1])).epsilon(1e-14));
    CHECK(p2.w_mean(k, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("subspace sweep matches the transcription oracle") {
  std::mt19937_64 rng(71);
  const auto data = random_dataset(5, 3, 8, 0.7, rng);
  auto post = random_posterior(data, rng);
  HyperParams hp;
  hp.lambda = 0.9;
  const BatchPosterior before = post;
  batch_update_subspace(data, post, hp);
  const std::size_t n = data.size();
  for (Index k = 0; k < 5; ++k) {
    oracle::Mat P = oracle::Mat::Zero(3, 3);
    oracle::Vec t = oracle::Vec::Zero(3);
    for (std::size_t i = 0; i < n; ++i) {
      if (!data.samples[i].phi[static_cast<std::size_t>(k)]) continue;
      const double wt = weight(n, i, hp.lambda);
      for (Index a = 0; a < 3; ++a) {
        const double xa = before.x_mean(static_cast<Index>(i), a);
        t[a] += wt * xa * data.samples[i].z[k];
        for (Index b = 0; b < 3; ++b) {
          P(a, b) += wt * (before.x_cov[i](a, b) + xa * before.x_mean(static_cast<Index>(i), b));
        }
      }
    }
    const auto [w, var] = oracle::row_update(P, t, before.gamma.row(k).transpose(), before.s,
                                             before.beta, before.w_mean.row(k).transpose());
    for (Index l = 0; l < 3; ++l) {
      CHECK(std::abs(post.w_mean(k, l) - w[l]) <= 1e-10 * std::max(1.0, std::abs(w[l])));
      CHECK(std::abs(post.w_var(k, l) - var[l]) <= 1e-10 * var[l]);
    }
  }
}

TEST_CASE("column scale examples") {
  BatchDataset data;
  data.dims = {1, 1};
  data.samples.push_back({Vector::Zero(1), {1}, 1});
  BatchPosterior post = init_batch_posterior(data, 1);
  post.w_mean.setZero();
  post.w_var.setConstant(1e-300);
  post.x_mean(0, 0) = 2.0;
  post.x_cov[0](0, 0) = 0.0;
  HyperParams hp;
  hp.lambda = 1.0;
  batch_update_column_scales(post, hp);
  CHECK(post.s[0] == doctest::Approx(0.5).epsilon(1e-12));

  // n + K + 1 = 4 with mu = nu = 0.
  BatchDataset d2;
  d2.dims = {2, 1};
  d2.samples.push_back({Vector::Zero(2), {1, 1}, 1});
  BatchPosterior p2 = init_batch_posterior(d2, 1);
  hp.mu = 0.0;
  hp.nu = 0.0;
  batch_update_column_scales(p2, hp);
  CHECK(p2.delta[0] == 2.0);
}

TEST_CASE("column scales match the transcription oracle") {
  std::mt19937_64 rng(81);
  const auto data = random_dataset(7, 3, 6, 0.5, rng);
  auto post = random_posterior(data, rng);
  HyperParams hp;
  hp.lambda = 0.8;
  const BatchPosterior b = post;
  batch_update_column_scales(post, hp);
  const std::size_t n = data.size();
  for (Index l = 0; l < 3; ++l) {
    double ww = 0.0;
    for (Index k = 0; k < 7; ++k)
      ww += b.gamma(k, l) * (b.w_mean(k, l) * b.w_mean(k, l) + b.w_var(k, l));
    double xx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = b.x_mean(static_cast<Index>(i), l);
      xx += weight(n, i, hp.lambda) * (x * x + b.x_cov[i](l, l));
    }
    const double s = std::sqrt(b.delta[l] / (b.beta * (ww + xx)));
    const double delta =
        (hp.mu + (6.0 + 7.0 + 1.0) / 2.0) / (hp.nu + (1 / b.s[l] + 1 / b.delta[l]) / 2);
    CHECK(std::abs(post.s[l] - s) <= 1e-12 * s);
    CHECK(std::abs(post.delta[l] - delta) <= 1e-12 * delta);
  }
}

TEST_CASE("element scale examples and oracle") {
  BatchDataset data;
  data.dims = {1, 1};
  data.samples.push_back({Vector::Zero(1), {1}, 1});
  BatchPosterior post = init_batch_posterior(data, 1);
  post.w_mean(0, 0) = std::sqrt(3.0);
  post.w_var(0, 0) = 1.0;
  HyperParams hp;
  hp.sparse_subspace = true;
  hp.psi = 0.0;
  hp.xi = 0.0;
  batch_update_element_scales(post, hp);
  CHECK(post.gamma(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.rho(0, 0) == 1.0);

  std::mt19937_64 rng(91);
  const auto d2 = random_dataset(6, 3, 4, 0.5, rng);
  auto p2 = random_posterior(d2, rng);
  HyperParams h2;
  h2.sparse_subspace = true;
  const BatchPosterior b = p2;
  batch_update_element_scales(p2, h2);
  for (Index k = 0; k < 6; ++k) {
    for (Index l = 0; l < 3; ++l) {
      const double m2 = b.w_mean(k, l) * b.w_mean(k, l) + b.w_var(k, l);
      const double g = std::sqrt(b.rho(k, l) / (b.beta * b.s[l] * m2));
      const double r = (h2.psi + 1) / (h2.xi + (1 / b.gamma(k, l) + 1 / b.rho(k, l)) / 2);
      CHECK(std::abs(p2.gamma(k, l) - g) <= 1e-12 * g);
      CHECK(std::abs(p2.rho(k, l) - r) <= 1e-12 * r);
    }
  }

  HyperParams dense;
  auto p3 = random_posterior(d2, rng);
  const Matrix g3 = p3.gamma;
  batch_update_element_scales(p3, dense);
  CHECK(p3.gamma == g3);
}

TEST_CASE("noise update examples") {
  BatchDataset data;
  data.dims = {1, 1};
  data.samples.push_back({Vector::Zero(1), {1}, 1});
  BatchPosterior post = init_batch_posterior(data, 1);
  post.w_mean.setZero();
  post.w_var.setZero();
  post.x_cov[0].setZero();
  post.s.setZero();
  HyperParams hp;
  hp.kappa = 1.0;
  hp.theta = 1.0;
  batch_update_noise(data, post, hp);
  CHECK(post.beta == doctest::Approx(2.5).epsilon(1e-15));

  // Exact fit with zero variances: only the prior terms remain in the rate.
  BatchDataset fit;
  fit.dims = {2, 1};
  fit.samples.push_back({Vector::Constant(2, 1.0), {1, 1}, 1});
  BatchPosterior pf = init_batch_posterior(fit, 1);
  pf.w_mean.setOnes();
  pf.w_var.setZero();
  pf.x_mean(0, 0) = 1.0;
  pf.x_cov[0].setZero();
  pf.s.setConstant(1e-12);
  batch_update_noise(fit, pf, hp);
  const double shape = 1.0 + (1.0 * 3.0 + 2.0) / 2.0;
  CHECK(pf.beta == doctest::Approx(shape / 1.0).epsilon(1e-10));
}

TEST_CASE("noise update matches the per-sample expansion") {
  std::mt19937_64 rng(101);
  const auto data = random_dataset(4, 2, 6, 0.6, rng);
  auto post = random_posterior(data, rng);
  HyperParams hp;
  hp.lambda = 0.85;
  const BatchPosterior b = post;
  batch_update_noise(data, post, hp);

  const std::size_t n = data.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wt = weight(n, i, hp.lambda);
    const auto& smp = data.samples[i];
    const auto& Sx = b.x_cov[i];
    for (Index k = 0; k < 4; ++k) {
      if (!smp.phi[static_cast<std::size_t>(k)]) continue;
      double fit = 0.0;
      double xSx = 0.0;
      double wSw = 0.0;
      double tr = 0.0;
      for (Index a = 0; a < 2; ++a) {
        const double xa = b.x_mean(static_cast<Index>(i), a);
        fit += b.w_mean(k, a) * xa;
        xSx += xa * b.w_var(k, a) * xa;
        tr += b.w_var(k, a) * Sx(a, a);
        for (Index c = 0; c < 2; ++c) wSw += b.w_mean(k, a) * Sx(a, c) * b.w_mean(k, c);
      }
      sum += wt * ((smp.z[k] - fit) * (smp.z[k] - fit) + xSx + wSw + tr);
    }
    for (Index l = 0; l < 2; ++l) {
      const double x = b.x_mean(static_cast<Index>(i), l);
      sum += wt * b.s[l] * (x * x + Sx(l, l));
    }
  }
  for (Index k = 0; k < 4; ++k) {
    for (Index l = 0; l < 2; ++l) {
      sum += b.s[l] * b.gamma(k, l) * (b.w_mean(k, l) * b.w_mean(k, l) + b.w_var(k, l));
    }
  }
  const double beta = (hp.kappa + (6.0 * (4 + 2) + 4 * 2) / 2.0) / (hp.theta + sum / 2.0);
  CHECK(std::abs(post.beta - beta) <= 1e-10 * beta);
}

TEST_CASE("batch_fit reconstructs noiseless rank-1 data") {
  ScenarioSpec spec;
  spec.K = 10;
  spec.r = 1;
  spec.n_samples = 20;
  spec.noiseless = true;
  const auto gt = gen_scenario(spec);
  BatchOptions opt;
  opt.max_iters = 100;
  const auto res = batch_fit(dataset_from(gt, 3), HyperParams{}, opt);
  CHECK(res.iterations <= 100);
  CHECK(reconstruction_error(res.posterior, gt.Y) <= 1e-3);
}

TEST_CASE("batch_fit on zero data shrinks the subspace") {
  BatchDataset data;
  data.dims = {6, 3};
  for (std::uint64_t i = 1; i <= 10; ++i) data.samples.push_back({Vector::Zero(6), Mask(6, 1), i});
  BatchOptions opt;
  opt.max_iters = 50;
  opt.tol = 0.0;
  const auto res = batch_fit(data, HyperParams{}, opt);
  CHECK(res.iterations == 50);
  CHECK(res.posterior.w_mean.colwise().norm().maxCoeff() <= 1e-6);
}

TEST_CASE("infinite tolerance stops after one cycle") {
  std::mt19937_64 rng(5);
  const auto data = random_dataset(5, 2, 6, 0.8, rng);
  BatchOptions opt;
  opt.tol = std::numeric_limits<double>::infinity();
  const auto res = batch_fit(data, HyperParams{}, opt);
  CHECK(res.iterations == 1);
  CHECK(res.converged);
}

TEST_CASE("posterior stays valid across cycles") {
  for (bool sparse : {false, true}) {
    ScenarioSpec spec;
    spec.K = 10;
    spec.r = 2;
    spec.n_samples = 30;
    spec.pi = 0.6;
    spec.seed = 12;
    const auto gt = gen_scenario(spec);
    const auto data = dataset_from(gt, 4);
    HyperParams hp;
    hp.sparse_subspace = sparse;
    hp.lambda = 0.97;
    auto post = init_batch_posterior(data, 3);
    for (int it = 0; it < 40; ++it) {
      batch_update_coefficients(data, post, hp);
      batch_update_subspace(data, post, hp);
      batch_update_column_scales(post, hp);
      batch_update_element_scales(post, hp);
      batch_update_noise(data, post, hp);
      for (const auto& c : post.x_cov) {
        REQUIRE(c.isApprox(c.transpose()));
        REQUIRE(Eigen::SelfAdjointEigenSolver<Matrix>(c).eigenvalues().minCoeff() > 0.0);
      }
      REQUIRE(post.s.minCoeff() > 0.0);
      REQUIRE(post.delta.minCoeff() > 0.0);
      REQUIRE(post.gamma.minCoeff() > 0.0);
      REQUIRE(post.rho.minCoeff() > 0.0);
      REQUIRE(post.w_var.minCoeff() > 0.0);
      REQUIRE(post.beta > 0.0);
      if (!sparse) REQUIRE(post.gamma.isOnes());
    }
  }
}

TEST_CASE("batch_fit is deterministic") {
  std::mt19937_64 rng(9);
  const auto data = random_dataset(8, 3, 12, 0.7, rng);
  BatchOptions opt;
  opt.max_iters = 30;
  const auto a = batch_fit(data, HyperParams{}, opt);
  const auto b = batch_fit(data, HyperParams{}, opt);
  CHECK(a.iterations == b.iterations);
  CHECK(a.posterior.w_mean == b.posterior.w_mean);
  CHECK(a.posterior.w_var == b.posterior.w_var);
  CHECK(a.posterior.x_mean == b.posterior.x_mean);
  CHECK(a.posterior.s == b.posterior.s);
  CHECK(a.posterior.beta == b.posterior.beta);
}

TEST_CASE("batch_fit reveals the rank of noiseless data") {
  for (Index r = 1; r <= 2; ++r) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      ScenarioSpec spec;
      spec.K = 20;
      spec.r = r;
      spec.n_samples = 50;
      spec.noiseless = true;
      spec.seed = seed;
      const auto gt = gen_scenario(spec);
      // Pruning the last spare column can take several hundred cycles.
      BatchOptions opt;
      opt.max_iters = 5000;
      const auto res = batch_fit(dataset_from(gt, r + 2), HyperParams{}, opt);
      CAPTURE(r);
      CAPTURE(seed);
      REQUIRE(res.converged);
      CHECK(effective_rank(res.posterior.w_mean, 1e-3) <= r);
      CHECK(reconstruction_error(res.posterior, gt.Y) <= 1e-3);
    }
  }
}

}  // TEST_SUITE("batch_vb")
