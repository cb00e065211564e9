#include "midas/dgp.hpp"
#include "midas/sampler.hpp"
#include "midas/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace midas;

namespace {

DesignMatrix plain_design(const MatrixXd& x, const VectorXd& y, const MatrixXd& x_test) {
  DesignMatrix d;
  d.x = x;
  d.y = y;
  d.x_test = x_test;
  d.standardizer.mean = VectorXd::Zero(x.cols());
  d.standardizer.sd = VectorXd::Ones(x.cols());
  d.underdetermined = x.rows() < x.cols();
  return d;
}

ModelConfig short_config(MeanModel mean, VarianceModel var = VarianceModel::hom) {
  ModelConfig c;
  c.mean = mean;
  c.variance = var;
  c.mcmc = {1500, 500, 1};
  return c;
}

DesignMatrix dgp_design(const ModelConfig& cfg, SimulatedDataset& ds, std::uint64_t seed) {
  DgpSpec spec;
  spec.k = 5;
  spec.t_lf = 60;
  Rng rng(seed);
  ds = simulate_dgp(spec, rng);
  std::vector<int> train;
  for (int t = ds.first_row; t < ds.oos_row; ++t) train.push_back(t);
  return assemble_design(ds.panel, cfg.weights(cfg.theta_init), cfg.lf_lags, cfg.hf_lags, cfg.horizon, train,
                         {ds.oos_row});
}

}  // namespace

TEST_CASE("BLR chain recovers coefficients and noise variance") {
  Rng rng(1);
  const Index t = 150;
  MatrixXd x(t, 4);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  VectorXd beta(4);
  beta << 0.8, 0, -0.5, 0;
  const VectorXd y = x * beta + 0.3 * rng.normal_vector(t);
  const auto draws = run_chain(short_config(MeanModel::blr), plain_design(x, y, MatrixXd(0, 4)), rng);
  REQUIRE(draws.retained() == 1000);
  const VectorXd post = draws.beta.colwise().mean().transpose();
  CHECK((post - beta).cwiseAbs().maxCoeff() < 0.1);
  CHECK(draws.noise.col(0).mean() == doctest::Approx(0.09).epsilon(0.3));
  CHECK(draws.diagnostics.failures == 0);
}

TEST_CASE("GP chain tracks a smooth function") {
  Rng rng(2);
  const Index t = 60;
  MatrixXd x(t, 1);
  VectorXd truth(t);
  for (Index i = 0; i < t; ++i) {
    x(i, 0) = rng.uniform(-2, 2);  // unordered, so the AR(1) prior scale reflects noise
    truth(i) = std::sin(1.5 * x(i, 0));
  }
  const VectorXd y = truth + 0.05 * rng.normal_vector(t);
  const auto draws = run_chain(short_config(MeanModel::gp), plain_design(x, y, MatrixXd(0, 1)), rng);
  const VectorXd fbar = draws.f.colwise().mean().transpose();
  CHECK(std::sqrt((fbar - truth).squaredNorm() / t) < 0.1);
  CHECK(draws.diagnostics.kernel_acceptance > 0.05);
  CHECK(draws.diagnostics.kernel_acceptance < 0.8);
}

TEST_CASE("default MCMC settings retain 3000 draws") {
  Rng rng(3);
  MatrixXd x(20, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const VectorXd y = rng.normal_vector(20);
  ModelConfig c;
  c.mean = MeanModel::blr;
  const auto draws = run_chain(c, plain_design(x, y, MatrixXd(0, 2)), rng);
  CHECK(draws.retained() == 3000);
  CHECK(draws.f.cols() == 20);
}

TEST_CASE("xalm MH") {
  Rng rng(4);
  const XalmTheta start{0.05, -0.02};
  MhOutcome o;
  const auto same = mh_update_xalm(start, 0.0, 0.1, [](const XalmTheta&) { return 0.0; }, rng, &o);
  CHECK(o.accepted);
  CHECK(same.theta1 == start.theta1);

  mh_update_xalm(start, 0.1, 0.1, [](const XalmTheta&) -> double { throw NumericalError("boom"); }, rng, &o);
  CHECK(o.failed);
  CHECK_FALSE(o.accepted);
  const auto rej = mh_update_xalm(start, 0.1, 0.1, [](const XalmTheta& t) {
    return t.theta1 == 0.05 ? 0.0 : -INFINITY;
  }, rng, &o);
  CHECK(rej.theta1 == start.theta1);
  CHECK_FALSE(o.accepted);

  // flat likelihood: the chain samples the N(0, 0.1^2) prior
  XalmTheta th{};
  std::vector<double> a;
  for (int i = 0; i < 100000; ++i) {
    th = mh_update_xalm(th, 0.15, 0.1, [](const XalmTheta&) { return 0.0; }, rng);
    a.push_back(th.theta1);
  }
  CHECK(std::sqrt(stats::variance(a)) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("xalm chain with zero step keeps the initial weights") {
  ModelConfig cfg = short_config(MeanModel::blr);
  cfg.scheme = Scheme::xalm;
  cfg.theta_step = 0;
  cfg.adapt = false;
  cfg.theta_init = {0.1, -0.05};
  cfg.mcmc = {300, 100, 1};
  SimulatedDataset ds;
  const auto design = dgp_design(cfg, ds, 5);
  Rng rng(5);
  const auto draws = run_chain(cfg, design, rng);
  CHECK((draws.theta.col(0).array() == 0.1).all());
  CHECK((draws.theta.col(1).array() == -0.05).all());
}

TEST_CASE("draws survive a save/load round trip") {
  for (auto mean : {MeanModel::blr, MeanModel::gp, MeanModel::bart}) {
    ModelConfig cfg = short_config(mean, VarianceModel::sv);
    cfg.scheme = Scheme::xalm;
    cfg.mcmc = {120, 60, 2};
    cfg.bart.trees = 10;
    SimulatedDataset ds;
    const auto design = dgp_design(cfg, ds, 6);
    Rng rng(6);
    const auto draws = run_chain(cfg, design, rng);
    const auto path = std::filesystem::temp_directory_path() / "midas_sampler_roundtrip.mcol";
    save_draws(draws, design, R"({"note":1})").write(path);
    const auto [back, bdesign] = load_draws(ColumnStore::read(path));
    CHECK(back.config.canonical() == cfg.canonical());
    CHECK(back.f == draws.f);
    CHECK(back.sv == draws.sv);
    CHECK(back.theta == draws.theta);
    CHECK(bdesign.x == design.x);
    CHECK(bdesign.train.hf.size() == design.train.hf.size());
    Rng r1(9), r2(9);
    const auto p1 = draw_predictive(draws, design, r1);
    const auto p2 = draw_predictive(back, bdesign, r2);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0].draws == p2[0].draws);
    CHECK(p1[0].target_row == ds.oos_row);
  }
}

TEST_CASE("predicting with a foreign standardizer is rejected") {
  Rng rng(7);
  MatrixXd x(30, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  auto d = plain_design(x, rng.normal_vector(30), MatrixXd::Zero(1, 2));
  ModelConfig cfg = short_config(MeanModel::blr);
  cfg.mcmc = {50, 10, 1};
  const auto draws = run_chain(cfg, d, rng);
  d.standardizer.mean(0) = 0.5;
  try {
    draw_predictive(draws, d, rng);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("standardizer mismatch") != std::string::npos);
  }
}

TEST_CASE("homoskedastic predictive variance is mean uncertainty plus noise") {
  // Var(y*) = y_sd^2 (Var(x* beta) + sigma^2)
  const Index r = 40000;
  Rng rng(8);
  PosteriorDraws pd;
  pd.config = short_config(MeanModel::blr);
  pd.f = MatrixXd::Zero(r, 3);
  pd.noise = MatrixXd::Constant(r, 3, 0.5);
  pd.beta.resize(r, 2);
  for (Index i = 0; i < r; ++i) pd.beta.row(i) << 1 + 0.3 * rng.normal(), -0.5;
  MatrixXd xt(1, 2);
  xt << 2.0, 1.0;
  auto d = plain_design(MatrixXd::Zero(3, 2), VectorXd::Zero(3), xt);
  d.standardizer.y_mean = 10;
  d.standardizer.y_sd = 2;
  pd.standardizer = d.standardizer;
  const auto out = draw_predictive(pd, d, rng);
  REQUIRE(out.size() == 1);
  const double var = stats::variance(out[0].draws);
  const double expect = 4 * (4 * 0.09 + 0.5);
  CHECK(var == doctest::Approx(expect).epsilon(0.03));
  CHECK(out[0].mean() == doctest::Approx(10 + 2 * 1.5).epsilon(0.005));
  CHECK(out[0].quantile(0.5) == doctest::Approx(13).epsilon(0.01));
}

TEST_CASE("chains are deterministic given the stream") {
  Rng a(10), b(10);
  MatrixXd x(25, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = a.normal();
  b = a;
  const VectorXd y = x.col(0);
  ModelConfig cfg = short_config(MeanModel::gp, VarianceModel::sv);
  cfg.mcmc = {100, 50, 1};
  const auto d = plain_design(x, y, MatrixXd(0, 2));
  CHECK(run_chain(cfg, d, a).f == run_chain(cfg, d, b).f);
}
