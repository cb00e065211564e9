#pragma once

#include "midas/config.hpp"
#include "midas/data.hpp"
#include "midas/gp.hpp"
#include "midas/io.hpp"

#include <functional>
#include <vector>

namespace midas {

struct ChainDiagnostics {
  int iterations = 0;
  int failures = 0;
  double kernel_acceptance = 0;
  double theta_acceptance = 0;
  double tree_acceptance = 0;
  double kernel_step = 0;  // final random-walk scales
  double theta_step = 0;
};

/// Retained draws, in standardized units. Rows index retained draws.
struct PosteriorDraws {
  ModelConfig config;
  Standardizer standardizer;  // of the design the chain was run on
  MatrixXd f;       // fitted mean at training rows, R x T
  MatrixXd noise;   // error variances at training rows, R x T
  MatrixXd beta;    // BLR coefficients, R x M
  MatrixXd kernel;  // GP (xi, lambda), R x 2
  MatrixXd theta;   // xalm (theta1, theta2), R x 2
  MatrixXd sv;      // SV (mu, phi, sigma, h_T), R x 4
  MatrixXd f_test;  // BART mean at the design's test rows, R x n_test
  ChainDiagnostics diagnostics;

  Index retained() const { return f.rows(); }
};

/// Gibbs sampler: mean block, variance block, hyperparameter block per iteration.
PosteriorDraws run_chain(const ModelConfig& config, const DesignMatrix& design, Rng& rng);

/// Random-walk MH for (theta1, theta2) under independent N(0, prior_sd^2) priors.
/// `log_lik` may throw NumericalError or return -inf; either rejects.
XalmTheta mh_update_xalm(const XalmTheta& current, double step, double prior_sd,
                         const std::function<double(const XalmTheta&)>& log_lik, Rng& rng,
                         MhOutcome* outcome = nullptr);

/// Predictive draws for one target period, in original units.
struct PredictiveDistribution {
  int target_row = -1;
  Horizon h;
  std::vector<double> draws;

  double quantile(double tau) const;
  double mean() const;
};

/// One predictive draw per retained posterior draw and test row of `design`.
/// Throws DataError("standardizer mismatch ...") if `design` was not built the
/// same way as the design the chain ran on.
std::vector<PredictiveDistribution> draw_predictive(const PosteriorDraws& draws, const DesignMatrix& design, Rng& rng);

/// Column-store round trip of draws plus the design needed to predict from them.
ColumnStore save_draws(const PosteriorDraws& draws, const DesignMatrix& design, const std::string& extra_meta = "{}");
std::pair<PosteriorDraws, DesignMatrix> load_draws(const ColumnStore& store);

}  // namespace midas
