#include "midas/stats.hpp"
#include "midas/volatility.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <numbers>

using namespace midas;

TEST_CASE("log chi-square mixture") {
  using M = LogChiSquareMixture;
  double p = 0, mean = 0, second = 0;
  for (int j = 0; j < 10; ++j) {
    p += M::prob[j];
    mean += M::prob[j] * M::mean[j];
    second += M::prob[j] * (M::var[j] + M::mean[j] * M::mean[j]);
  }
  CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
  // E log chi2_1 = -(gamma_E + log 2), Var = pi^2 / 2
  const double euler = 0.5772156649015329;
  CHECK(mean == doctest::Approx(-(euler + std::log(2.0))).epsilon(1e-3));
  CHECK(second - mean * mean == doctest::Approx(std::numbers::pi * std::numbers::pi / 2).epsilon(2e-3));
}

TEST_CASE("inverse-gamma posterior for the homoskedastic variance") {
  VectorXd e(3);
  e << 1, 2, 3;
  const auto p = homoskedastic_posterior(e, 0.01, 0.01);
  CHECK(p.shape == doctest::Approx(1.51));
  CHECK(p.scale == doctest::Approx(7.01));

  Rng rng(1);
  VectorXd big = rng.normal_vector(400) * 1.5;
  const auto q = homoskedastic_posterior(big, 0.01, 0.01);
  const double mean = q.scale / (q.shape - 1);
  const double sd = mean / std::sqrt(q.shape - 2);
  const int n = 40000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += sample_homoskedastic_variance(big, 0.01, 0.01, rng);
  CHECK(std::abs(s / n - mean) < 5 * sd / std::sqrt(n));
  CHECK(mean == doctest::Approx(2.25).epsilon(0.15));

  VectorXd bad = e;
  bad(1) = std::nan("");
  CHECK_THROWS_AS(homoskedastic_posterior(bad, 1, 1), NumericalError);
}

TEST_CASE("smoother matches dense Gaussian conditioning for T=3") {
  using M = LogChiSquareMixture;
  const double mu = -0.5, phi = 0.8, sigma = 0.4;
  VectorXd ys(3);
  ys << -2.0, 0.5, -1.2;
  const std::vector<int> s{2, 5, 7};

  // prior: stationary AR(1) covariance
  MatrixXd prior(3, 3);
  const double v0 = sigma * sigma / (1 - phi * phi);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) prior(i, j) = v0 * std::pow(phi, std::abs(i - j));
  MatrixXd obs = MatrixXd::Zero(3, 3);
  VectorXd shifted(3);
  for (int i = 0; i < 3; ++i) {
    obs(i, i) = M::var[s[i]];
    shifted(i) = ys(i) - M::mean[s[i]] - mu;
  }
  const MatrixXd gain = prior * (prior + obs).fullPivLu().inverse();
  const VectorXd mean = VectorXd::Constant(3, mu) + gain * shifted;
  const MatrixXd cov = prior - gain * prior;

  const auto sm = smooth_logvol(ys, s, mu, phi, sigma);
  for (int i = 0; i < 3; ++i) {
    CHECK(sm.mean(i) == doctest::Approx(mean(i)).epsilon(1e-10));
    CHECK(sm.var(i) == doctest::Approx(cov(i, i)).epsilon(1e-10));
  }

  // FFBS draws reproduce the smoothed moments
  Rng rng(2);
  const int n = 100000;
  VectorXd s1 = VectorXd::Zero(3);
  MatrixXd s2 = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const VectorXd h = ffbs_logvol(ys, s, mu, phi, sigma, rng);
    s1 += h;
    s2 += h * h.transpose();
  }
  const VectorXd m = s1 / n;
  const MatrixXd c = s2 / n - m * m.transpose();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(m(i) - mean(i)) < 5 * std::sqrt(cov(i, i) / n));
  CHECK((c - cov).cwiseAbs().maxCoeff() < 0.02 * cov.diagonal().maxCoeff());
}

TEST_CASE("zero state noise gives a flat path") {
  Rng rng(3);
  const VectorXd ys = rng.normal_vector(20);
  std::vector<int> s(20, 4);
  const VectorXd h = ffbs_logvol(ys, s, -1.3, 0.9, 0.0, rng);
  CHECK((h.array() + 1.3).abs().maxCoeff() < 1e-12);

  SvState st = SvState::initial(5, 0.2);
  st.sigma = 0;
  st.phi = 0.5;
  st.h(4) = 1.2;
  // h_{T+k} = mu + phi^k (h_T - mu)
  CHECK(forecast_logvol(st, 3, rng) == doctest::Approx(0.2 + 0.125 * 1.0));
}

TEST_CASE("indicator draws follow the component posterior") {
  using M = LogChiSquareMixture;
  Rng rng(4);
  VectorXd ys(2), h(2);
  ys << 1.9, -6.0;
  h << 0.4, -0.5;
  const int n = 50000;
  for (Index i = 0; i < 2; ++i) {
    std::array<double, 10> p{};
    double z = 0;
    for (int j = 0; j < 10; ++j) {
      const double d = ys(i) - h(i) - M::mean[j];
      z += p[j] = M::prob[j] / std::sqrt(2 * std::numbers::pi * M::var[j]) * std::exp(-0.5 * d * d / M::var[j]);
    }
    std::array<int, 10> counts{};
    for (int k = 0; k < n; ++k) ++counts[sample_mixture_indicators(ys, h, rng)[i]];
    for (int j = 0; j < 10; ++j) {
      const double pj = p[j] / z;
      CHECK(std::abs(counts[j] / double(n) - pj) < 5 * std::sqrt(pj * (1 - pj) / n) + 1e-12);
    }
  }
}

TEST_CASE("state validation") {
  SvState s = SvState::initial(3, 0);
  s.phi = 1.0;
  CHECK_THROWS_AS(s.validate(), NumericalError);
  s.phi = 0.5;
  s.h(1) = std::nan("");
  CHECK_THROWS_AS(s.validate(), NumericalError);
  Rng rng(1);
  VectorXd e = VectorXd::Ones(3);
  e(0) = INFINITY;
  CHECK_THROWS_AS(sample_sv(e, SvState::initial(3, 0), SvPriors{}, rng), NumericalError);
}

TEST_CASE("Gibbs run recovers a simulated volatility path") {
  Rng rng(5);
  const Index t = 800;
  const double mu = -1.0, phi = 0.95, sigma = 0.25;
  VectorXd h(t), e(t);
  h(0) = mu + sigma / std::sqrt(1 - phi * phi) * rng.normal();
  for (Index i = 1; i < t; ++i) h(i) = mu + phi * (h(i - 1) - mu) + sigma * rng.normal();
  for (Index i = 0; i < t; ++i) e(i) = std::exp(0.5 * h(i)) * rng.normal();

  SvState s = SvState::initial(t, std::log((e.array().square()).mean()));
  const SvPriors pr;
  VectorXd hbar = VectorXd::Zero(t);
  double mubar = 0, phibar = 0;
  int kept = 0;
  for (int it = 0; it < 3000; ++it) {
    s = sample_sv(e, s, pr, rng);
    if (it >= 1000) {
      hbar += s.h;
      mubar += s.mu;
      phibar += s.phi;
      ++kept;
    }
  }
  hbar /= kept;
  CHECK(std::abs(mubar / kept - mu) < 0.5);
  CHECK(std::abs(phibar / kept - phi) < 0.1);
  const std::vector<double> a(hbar.data(), hbar.data() + t), b(h.data(), h.data() + t);
  CHECK(stats::correlation(a, b) > 0.6);
}
