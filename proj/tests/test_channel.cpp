#include <catch2/catch.hpp>

#include <cmath>
#include <complex>

#include "cellfree/channel.hpp"

using namespace cellfree;

TEST_CASE("gamma formula", "[channel]") {
  Matrix beta(1, 1);
  beta << 0.01;

  // tau_u * rho_u = 100 with beta = 0.01: gamma = 100*1e-4 / 2 = 0.005.
  CHECK(compute_gamma(beta, 200, 0.5)(0, 0) == Approx(0.005).epsilon(1e-12));

  // Perfect-CSI limit: tau_u * rho_u = 1e9.
  const double g = compute_gamma(beta, 1000000000, 1.0)(0, 0);
  CHECK(std::fabs(g - 0.01) / 0.01 < 1e-6);

  // Zero channel maps to zero estimate variance.
  beta << 0.0;
  CHECK(compute_gamma(beta, 20, 0.5)(0, 0) == 0.0);
}

TEST_CASE("gamma strictly between 0 and beta", "[channel]") {
  Matrix beta(3, 4);
  beta.setRandom();
  beta = beta.array().abs() + 0.01;
  const Matrix gamma = compute_gamma(beta, 20, 0.5);
  CHECK((gamma.array() > 0.0).all());
  CHECK((gamma.array() < beta.array()).all());
}

TEST_CASE("draw variance matches the MMSE statistics", "[channel][mc]") {
  ChannelStats stats;
  stats.beta = Matrix::Constant(1, 1, 0.8);
  stats.gamma = compute_gamma(stats.beta, 20, 0.5);
  const int l = 2, n_draws = 100000;

  double sum_hat = 0.0, sum_err = 0.0, sum_g = 0.0;
  std::complex<double> cross(0.0, 0.0);
  long count = 0;
  for (int d = 0; d < n_draws; ++d) {
    const ChannelDraw draw = draw_channels(stats, l, substream_seed(99, 1, d));
    for (int a = 0; a < l; ++a) {
      sum_hat += std::norm(draw.g_hat[0](a, 0));
      sum_err += std::norm(draw.g_err[0](a, 0));
      sum_g += std::norm(draw.g[0](a, 0));
      cross += draw.g_hat[0](a, 0) * std::conj(draw.g_err[0](a, 0));
      ++count;
    }
  }
  const double var_hat = sum_hat / count;
  const double var_err = sum_err / count;
  const double var_g = sum_g / count;
  const double gamma = stats.gamma(0, 0);
  const double beta = stats.beta(0, 0);

  CHECK(std::fabs(var_hat - gamma) / gamma < 0.02);
  CHECK(std::fabs(var_err - (beta - gamma)) / (beta - gamma) < 0.02);
  CHECK(std::fabs(var_g - beta) / beta < 0.02);

  // MMSE orthogonality: the empirical cross-covariance stays inside a
  // 3-sigma Monte Carlo bound.
  const double bound = 3.0 * std::sqrt(gamma * (beta - gamma) /
                                       static_cast<double>(count));
  CHECK(std::abs(cross / static_cast<double>(count)) < bound);
}

TEST_CASE("decomposition g = g_hat + g_err and perfect CSI", "[channel]") {
  ChannelStats stats;
  stats.beta = Matrix::Constant(2, 3, 0.5);
  stats.gamma = compute_gamma(stats.beta, 20, 0.5);
  const ChannelDraw draw = draw_channels(stats, 4, 123);
  for (int m = 0; m < 2; ++m) {
    const CMatrix sum = draw.g_hat[m] + draw.g_err[m];
    CHECK(draw.g[m] == sum);  // bitwise: g is stored as this sum
  }

  // gamma = beta injected: the estimation error vanishes identically.
  stats.gamma = stats.beta;
  const ChannelDraw perfect = draw_channels(stats, 4, 123);
  for (int m = 0; m < 2; ++m) CHECK(perfect.g_err[m].norm() == 0.0);
}

TEST_CASE("draws deterministic per seed", "[channel]") {
  ChannelStats stats;
  stats.beta = Matrix::Constant(2, 2, 1.0);
  stats.gamma = compute_gamma(stats.beta, 20, 0.5);
  const ChannelDraw a = draw_channels(stats, 3, 77);
  const ChannelDraw b = draw_channels(stats, 3, 77);
  const ChannelDraw c = draw_channels(stats, 3, 78);
  CHECK(a.g_hat[0] == b.g_hat[0]);
  CHECK(a.g_hat[0] != c.g_hat[0]);
}
