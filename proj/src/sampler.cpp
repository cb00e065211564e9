#include "midas/sampler.hpp"

#include "midas/bart.hpp"
#include "midas/blr.hpp"
#include "midas/stats.hpp"
#include "midas/volatility.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace midas {

namespace {

constexpr double kNoiseFloor = 1e-10;
constexpr int kAdaptWindow = 50;

// Compressed, freshly standardized regressors for new weights.
MatrixXd restandardized(const LagData& data, const MatrixXd& w, const Standardizer& fitted_on) {
  return fitted_on.apply(data.compress(w));
}

Standardizer refit(const LagData& train, const MatrixXd& w) { return Standardizer::fit(train.compress(w), train.y); }

double gaussian_loglik(const VectorXd& y, const VectorXd& mean, const VectorXd& noise) {
  return -0.5 * ((y - mean).array().square() / noise.array()).sum();
}

// Random-walk scale tuning toward a 20-40% acceptance band.
struct Adapter {
  double step;
  int accepted = 0;
  int tried = 0;
  long total_accepted = 0;
  long total_tried = 0;

  void record(bool ok) {
    accepted += ok;
    ++tried;
    total_accepted += ok;
    ++total_tried;
  }
  void maybe_adapt(bool enabled) {
    if (tried < kAdaptWindow) return;
    if (enabled) {
      const double rate = static_cast<double>(accepted) / tried;
      if (rate < 0.2) step *= 0.8;
      if (rate > 0.4) step *= 1.25;
    }
    accepted = tried = 0;
  }
  double rate() const { return total_tried ? static_cast<double>(total_accepted) / total_tried : 0.0; }
};

}  // namespace

XalmTheta mh_update_xalm(const XalmTheta& current, double step, double prior_sd,
                         const std::function<double(const XalmTheta&)>& log_lik, Rng& rng, MhOutcome* outcome) {
  MhOutcome local;
  MhOutcome& out = outcome ? *outcome : local;
  out = {};
  const XalmTheta prop{current.theta1 + step * rng.normal(), current.theta2 + step * rng.normal()};
  const double u = rng.uniform();
  if (step == 0) {
    out.accepted = true;
    return current;
  }
  const double v = prior_sd * prior_sd;
  auto log_prior = [v](const XalmTheta& t) { return -0.5 * (t.theta1 * t.theta1 + t.theta2 * t.theta2) / v; };
  double lp_new;
  try {
    lp_new = log_lik(prop) + log_prior(prop);
  } catch (const NumericalError&) {
    out.failed = true;
    return current;
  }
  if (!std::isfinite(lp_new)) return current;
  const double lp_old = log_lik(current) + log_prior(current);
  if (std::log(u) < lp_new - lp_old) {
    out.accepted = true;
    return prop;
  }
  return current;
}

PosteriorDraws run_chain(const ModelConfig& cfg, const DesignMatrix& design, Rng& rng) {
  cfg.validate();
  const bool xalm = cfg.scheme == Scheme::xalm;
  DesignMatrix d = design;
  XalmTheta theta = cfg.theta_init;
  if (xalm) d.recompress(cfg.weights(theta).values);

  const VectorXd y = d.y;
  const Index t = d.rows();
  const Index mcols = d.cols();
  const Index n_test = d.x_test.rows();
  if (t < 2) throw DataError("run_chain: at least two training rows are required");
  if (!y.allFinite() || !d.x.allFinite()) throw DataError("run_chain: non-finite design");

  const int r_total = cfg.mcmc.retained();
  PosteriorDraws out;
  out.config = cfg;
  out.standardizer = design.standardizer;
  out.f.resize(r_total, t);
  out.noise.resize(r_total, t);
  if (cfg.mean == MeanModel::blr) out.beta.resize(r_total, mcols);
  if (cfg.mean == MeanModel::gp) out.kernel.resize(r_total, 2);
  if (xalm) out.theta.resize(r_total, 2);
  if (cfg.variance == VarianceModel::sv) out.sv.resize(r_total, 4);
  if (cfg.mean == MeanModel::bart) out.f_test.resize(r_total, n_test);

  VectorXd f = VectorXd::Zero(t);
  VectorXd noise = VectorXd::Ones(t);
  double sigma2 = 1.0;
  SvState sv = SvState::initial(t, 0.0);

  // GP state
  const KernelPrior kprior = KernelPrior::from_residual_variance(ar1_residual_variance(y));
  KernelHyper kernel{1.0, kprior.b_lambda};
  MatrixXd sqdist;
  if (cfg.mean == MeanModel::gp) sqdist = squared_distances(d.x, d.x);

  // BLR state
  HorseshoeState hs(mcols);
  VectorXd beta = VectorXd::Zero(mcols);

  // BART state
  CutpointGrid grid;
  Forest forest;
  double leaf_var = 1.0;
  if (cfg.mean == MeanModel::bart) {
    grid = CutpointGrid::from_data(d.x);
    forest = Forest::stumps(cfg.bart.trees, t);
    leaf_var = cfg.bart.leaf_prior_variance(y.maxCoeff() - y.minCoeff());
  }
  const TreeContext ctx{d.x, grid, cfg.bart, leaf_var};
  long tree_accepts = 0;
  long tree_tries = 0;

  Adapter kernel_adapt{cfg.kernel_step};
  Adapter theta_adapt{cfg.theta_step};
  int failures = 0;
  const double max_failures = cfg.max_failure_rate * cfg.mcmc.iters;
  auto fail = [&](const char* what) {
    ++failures;
    if (failures > max_failures)
      throw NumericalError(std::string("chain aborted: ") + std::to_string(failures) + " numerical failures in " +
                           std::to_string(cfg.mcmc.iters) + " iterations (last: " + what + ")");
  };

  int kept = 0;
  for (int it = 0; it < cfg.mcmc.iters; ++it) {
    // 1. conditional mean
    switch (cfg.mean) {
      case MeanModel::gp: {
        try {
          const MatrixXd k = se_kernel_from_distances(sqdist, kernel);
          const auto post = gp_conditional_moments<double>(k, k, k, noise, y);
          f = sample_function_values(post, rng);
        } catch (const NumericalError&) {
          fail("GP function draw");
        }
        break;
      }
      case MeanModel::blr: {
        try {
          beta = sample_beta(d.x, y, noise, hs.prior_variances(), rng);
        } catch (const NumericalError&) {
          fail("coefficient draw");
        }
        f = d.x * beta;
        break;
      }
      case MeanModel::bart: {
        VectorXd r(t);
        for (std::size_t s = 0; s < forest.trees.size(); ++s) {
          r = y - forest.total + forest.fits[s];
          const auto step = tree_mh_step(forest.trees[s], ctx, r, noise, rng);
          tree_tries += step.proposed;
          tree_accepts += step.accepted;
          sample_leaf_params(forest.trees[s], ctx, r, noise, rng);
          VectorXd fit = forest.trees[s].predict(d.x, grid);
          forest.total += fit - forest.fits[s];
          forest.fits[s] = std::move(fit);
        }
        forest.total.setZero();
        for (const auto& fit : forest.fits) forest.total += fit;
        f = forest.total;
        break;
      }
    }

    // 2. error variances
    const VectorXd resid = y - f;
    if (cfg.variance == VarianceModel::hom) {
      sigma2 = std::max(kNoiseFloor, sample_homoskedastic_variance(resid, cfg.a0, cfg.b0, rng));
      noise.setConstant(sigma2);
    } else {
      sv = sample_sv(resid, sv, cfg.sv, rng);
      noise = sv.h.array().exp().max(kNoiseFloor).matrix();
    }

    // 3. hyperparameters
    if (cfg.mean == MeanModel::gp) {
      MhOutcome o;
      kernel = mh_update_kernel_hyper(kernel, sqdist, y, noise, kprior, kernel_adapt.step, kernel_adapt.step, rng, &o);
      if (o.failed) fail("kernel hyperparameter update");
      kernel_adapt.record(o.accepted);
      if (it < cfg.mcmc.burn) kernel_adapt.maybe_adapt(cfg.adapt);
    }
    if (cfg.mean == MeanModel::blr) hs = update_horseshoe(hs, beta, rng);
    if (xalm) {
      std::function<double(const XalmTheta&)> loglik = [&](const XalmTheta& th) -> double {
        const MatrixXd w = build_weight_matrix<double>(Scheme::xalm, cfg.hf_lags, 0, cfg.m, th).values;
        const MatrixXd xp = restandardized(d.train, w, refit(d.train, w));
        switch (cfg.mean) {
          case MeanModel::gp:
            return gp_log_marginal<double>(y, se_kernel_from_distances(squared_distances(xp, xp), kernel), noise);
          case MeanModel::blr:
            return gaussian_loglik(y, xp * beta, noise);
          case MeanModel::bart: {
            const CutpointGrid g = CutpointGrid::from_data(xp);
            return gaussian_loglik(y, forest.predict(xp, g), noise);
          }
        }
        return -std::numeric_limits<double>::infinity();
      };
      MhOutcome o;
      const XalmTheta next = mh_update_xalm(theta, theta_adapt.step, cfg.theta_prior_sd, loglik, rng, &o);
      if (o.failed) fail("xalm update");
      theta_adapt.record(o.accepted);
      if (it < cfg.mcmc.burn) theta_adapt.maybe_adapt(cfg.adapt);
      if (o.accepted && (next.theta1 != theta.theta1 || next.theta2 != theta.theta2)) {
        theta = next;
        d.recompress(cfg.weights(theta).values);
        if (cfg.mean == MeanModel::gp) sqdist = squared_distances(d.x, d.x);
        if (cfg.mean == MeanModel::bart) {
          grid = CutpointGrid::from_data(d.x);
          forest.total.setZero();
          for (std::size_t s = 0; s < forest.trees.size(); ++s) {
            forest.fits[s] = forest.trees[s].predict(d.x, grid);
            forest.total += forest.fits[s];
          }
        }
      }
    }

    if (cfg.mcmc.keep(it)) {
      out.f.row(kept) = f.transpose();
      out.noise.row(kept) = noise.transpose();
      if (cfg.mean == MeanModel::blr) out.beta.row(kept) = beta.transpose();
      if (cfg.mean == MeanModel::gp) out.kernel.row(kept) << kernel.xi, kernel.lambda;
      if (xalm) out.theta.row(kept) << theta.theta1, theta.theta2;
      if (cfg.variance == VarianceModel::sv) out.sv.row(kept) << sv.mu, sv.phi, sv.sigma, sv.h(t - 1);
      if (cfg.mean == MeanModel::bart && n_test > 0) out.f_test.row(kept) = forest.predict(d.x_test, grid).transpose();
      ++kept;
    }
  }

  auto& diag = out.diagnostics;
  diag.iterations = cfg.mcmc.iters;
  diag.failures = failures;
  diag.kernel_acceptance = kernel_adapt.rate();
  diag.theta_acceptance = theta_adapt.rate();
  diag.tree_acceptance = tree_tries ? static_cast<double>(tree_accepts) / tree_tries : 0.0;
  diag.kernel_step = kernel_adapt.step;
  diag.theta_step = theta_adapt.step;
  if (!out.f.allFinite() || !out.noise.allFinite()) throw NumericalError("chain produced non-finite draws");
  return out;
}

double PredictiveDistribution::quantile(double tau) const { return stats::quantile(draws, tau); }

double PredictiveDistribution::mean() const { return stats::mean(draws); }

std::vector<PredictiveDistribution> draw_predictive(const PosteriorDraws& draws, const DesignMatrix& design,
                                                    Rng& rng) {
  const auto& cfg = draws.config;
  const bool xalm = cfg.scheme == Scheme::xalm;
  const auto& s0 = draws.standardizer;
  const auto& s1 = design.standardizer;
  if (s0.y_mean != s1.y_mean || s0.y_sd != s1.y_sd || s0.mean.size() != s1.mean.size() ||
      (!xalm && (s0.mean != s1.mean || s0.sd != s1.sd)))
    throw DataError("standardizer mismatch: test inputs were not built with the training standardizer");
  if (design.rows() != draws.f.cols()) throw DataError("standardizer mismatch: training sample differs from the fit");

  const Index n = design.x_test.rows();
  const Index r_total = draws.retained();
  std::vector<PredictiveDistribution> out(n);
  if (n == 0) return out;
  const int last_train = design.train.rows.empty() ? 0 : design.train.rows.back();
  std::vector<int> steps(n);
  for (Index j = 0; j < n; ++j) {
    out[j].target_row = design.test.rows.empty() ? -1 : design.test.rows[j];
    out[j].h = design.h;
    out[j].draws.resize(r_total);
    steps[j] = std::max(1, out[j].target_row - last_train);
  }
  if (cfg.mean == MeanModel::bart && draws.f_test.cols() != n)
    throw DataError("BART draws carry no mean values for these test rows; pass the test rows at fit time");

  MatrixXd x = design.x;
  MatrixXd x_test = design.x_test;
  MatrixXd sq_tt, sq_st, sq_ss;
  auto refresh_gp = [&]() {
    sq_tt = squared_distances(x, x);
    sq_st = squared_distances(x_test, x);
    sq_ss = squared_distances(x_test, x_test);
  };
  if (cfg.mean == MeanModel::gp && !xalm) refresh_gp();

  VectorXd fstar(n);
  for (Index r = 0; r < r_total; ++r) {
    if (xalm && cfg.mean != MeanModel::bart) {
      const XalmTheta th{draws.theta(r, 0), draws.theta(r, 1)};
      const MatrixXd w = cfg.weights(th).values;
      const Standardizer s = refit(design.train, w);
      x = restandardized(design.train, w, s);
      x_test = restandardized(design.test, w, s);
      if (cfg.mean == MeanModel::gp) refresh_gp();
    }
    const VectorXd noise = draws.noise.row(r).transpose();
    switch (cfg.mean) {
      case MeanModel::blr:
        fstar = x_test * draws.beta.row(r).transpose();
        break;
      case MeanModel::gp: {
        const KernelHyper k{draws.kernel(r, 0), draws.kernel(r, 1)};
        const auto post =
            gp_conditional_moments<double>(se_kernel_from_distances(sq_tt, k), se_kernel_from_distances(sq_st, k),
                                           se_kernel_from_distances(sq_ss, k), noise, design.y);
        fstar = sample_function_values(post, rng);
        break;
      }
      case MeanModel::bart:
        fstar = draws.f_test.row(r).transpose();
        break;
    }
    SvState sv;
    if (cfg.variance == VarianceModel::sv) {
      sv.h = VectorXd::Constant(1, draws.sv(r, 3));
      sv.mu = draws.sv(r, 0);
      sv.phi = draws.sv(r, 1);
      sv.sigma = draws.sv(r, 2);
    }
    for (Index j = 0; j < n; ++j) {
      const double var =
          cfg.variance == VarianceModel::hom ? noise(0) : std::exp(forecast_logvol(sv, steps[j], rng));
      out[j].draws[r] = s1.destandardize(fstar(j) + std::sqrt(var) * rng.normal());
    }
  }
  return out;
}

// --- serialization ---------------------------------------------------------

namespace {

MatrixXd rows_column(const std::vector<int>& rows) {
  MatrixXd m(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) m(i, 0) = rows[i];
  return m;
}

std::vector<int> column_rows(const MatrixXd& m) {
  std::vector<int> rows(m.rows());
  for (Index i = 0; i < m.rows(); ++i) rows[i] = static_cast<int>(m(i, 0));
  return rows;
}

void put_lag_data(ColumnStore& store, const std::string& prefix, const LagData& data) {
  store.add(prefix + ".rows", rows_column(data.rows));
  store.add(prefix + ".y", data.y);
  store.add(prefix + ".ylags", data.ylags);
  for (std::size_t k = 0; k < data.hf.size(); ++k) store.add(prefix + ".hf." + std::to_string(k), data.hf[k]);
}

LagData get_lag_data(const ColumnStore& store, const std::string& prefix, std::size_t blocks) {
  LagData data;
  data.rows = column_rows(store.get(prefix + ".rows"));
  data.y = store.get(prefix + ".y");
  data.ylags = store.get(prefix + ".ylags");
  for (std::size_t k = 0; k < blocks; ++k) data.hf.push_back(store.get(prefix + ".hf." + std::to_string(k)));
  return data;
}

}  // namespace

ColumnStore save_draws(const PosteriorDraws& draws, const DesignMatrix& design, const std::string& extra_meta) {
  nlohmann::ordered_json meta;
  meta["kind"] = "posterior-draws";
  meta["model"] = draws.config.id();
  meta["retained"] = draws.retained();
  meta["config"] = draws.config.to_key_values();
  meta["predictor_blocks"] = design.train.hf.size();
  meta["column_names"] = design.column_names;
  meta["column_group"] = design.column_group;
  meta["group_names"] = design.group_names;
  const auto& dg = draws.diagnostics;
  meta["diagnostics"] = {{"iterations", dg.iterations},
                         {"failures", dg.failures},
                         {"kernel_acceptance", dg.kernel_acceptance},
                         {"theta_acceptance", dg.theta_acceptance},
                         {"tree_acceptance", dg.tree_acceptance}};
  meta["extra"] = nlohmann::ordered_json::parse(extra_meta);

  ColumnStore store;
  store.header_json = meta.dump();
  store.add("draws.f", draws.f);
  store.add("draws.noise", draws.noise);
  store.add("draws.beta", draws.beta);
  store.add("draws.kernel", draws.kernel);
  store.add("draws.theta", draws.theta);
  store.add("draws.sv", draws.sv);
  store.add("draws.f_test", draws.f_test);
  store.add("standardizer.mean", draws.standardizer.mean);
  store.add("standardizer.sd", draws.standardizer.sd);
  store.add("standardizer.y", Eigen::Vector2d(draws.standardizer.y_mean, draws.standardizer.y_sd));
  store.add("design.standardizer.mean", design.standardizer.mean);
  store.add("design.standardizer.sd", design.standardizer.sd);
  store.add("design.standardizer.y", Eigen::Vector2d(design.standardizer.y_mean, design.standardizer.y_sd));
  store.add("design.x", design.x);
  store.add("design.y", design.y);
  store.add("design.x_test", design.x_test);
  put_lag_data(store, "train", design.train);
  put_lag_data(store, "test", design.test);
  return store;
}

std::pair<PosteriorDraws, DesignMatrix> load_draws(const ColumnStore& store) {
  const auto meta = nlohmann::ordered_json::parse(store.header_json);
  if (meta.value("kind", "") != "posterior-draws") throw DataError("column store does not hold posterior draws");
  PosteriorDraws draws;
  draws.config = ModelConfig::from_key_values(meta.at("config").get<std::map<std::string, std::string>>());
  draws.f = store.get("draws.f");
  draws.noise = store.get("draws.noise");
  draws.beta = store.get("draws.beta");
  draws.kernel = store.get("draws.kernel");
  draws.theta = store.get("draws.theta");
  draws.sv = store.get("draws.sv");
  draws.f_test = store.get("draws.f_test");
  draws.standardizer.mean = store.get("standardizer.mean");
  draws.standardizer.sd = store.get("standardizer.sd");
  draws.standardizer.y_mean = store.get("standardizer.y")(0);
  draws.standardizer.y_sd = store.get("standardizer.y")(1);
  const auto& dg = meta.at("diagnostics");
  draws.diagnostics.iterations = dg.at("iterations");
  draws.diagnostics.failures = dg.at("failures");
  draws.diagnostics.kernel_acceptance = dg.at("kernel_acceptance");
  draws.diagnostics.theta_acceptance = dg.at("theta_acceptance");
  draws.diagnostics.tree_acceptance = dg.at("tree_acceptance");

  DesignMatrix d;
  const auto blocks = meta.at("predictor_blocks").get<std::size_t>();
  d.h = draws.config.horizon;
  d.lf_lags = draws.config.lf_lags;
  d.hf_lags = draws.config.hf_lags;
  d.cols_per_predictor = draws.config.weights().cols();
  d.standardizer.mean = store.get("design.standardizer.mean");
  d.standardizer.sd = store.get("design.standardizer.sd");
  d.standardizer.y_mean = store.get("design.standardizer.y")(0);
  d.standardizer.y_sd = store.get("design.standardizer.y")(1);
  d.x = store.get("design.x");
  d.y = store.get("design.y");
  d.x_test = store.get("design.x_test");
  d.underdetermined = d.x.rows() < d.x.cols();
  d.train = get_lag_data(store, "train", blocks);
  d.test = get_lag_data(store, "test", blocks);
  d.column_names = meta.at("column_names").get<std::vector<std::string>>();
  d.column_group = meta.at("column_group").get<std::vector<int>>();
  d.group_names = meta.at("group_names").get<std::vector<std::string>>();
  return {std::move(draws), std::move(d)};
}

}  // namespace midas
