#pragma once

#include "midas/common.hpp"

namespace midas {

/// Horseshoe global-local shrinkage state in the auxiliary inverse-gamma
/// representation: beta_m ~ N(0, tau2 * lam2_m).
struct HorseshoeState {
  double tau2 = 1;
  VectorXd lam2;
  double aux_tau = 1;
  VectorXd aux_lam;
  VectorXd beta;

  explicit HorseshoeState(Index m = 0)
      : lam2(VectorXd::Ones(m)), aux_lam(VectorXd::Ones(m)), beta(VectorXd::Zero(m)) {}

  /// Prior variances tau2 * lam2_m, floored at 1e-12.
  VectorXd prior_variances() const;
};

/// Moments of beta | y ~ N(mean, cov) with prior N(0, diag(prior_var)) and
/// heteroskedastic noise diag(noise). Dense M x M route.
struct GaussianMoments {
  VectorXd mean;
  MatrixXd cov;
};
GaussianMoments blr_posterior_moments(const MatrixXd& x, const VectorXd& y, const VectorXd& noise,
                                      const VectorXd& prior_var);

/// Exact draw of beta given prior variances. Uses the T x T fast sampler when
/// rows < cols and a dense Cholesky of the M x M precision otherwise.
VectorXd sample_beta(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                     Rng& rng);

/// The two routes, exposed for testing.
VectorXd sample_beta_dense(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                           Rng& rng);
VectorXd sample_beta_fast(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                          Rng& rng);

/// One sweep of the horseshoe conditionals in the order tau2, lam2, aux_tau, aux_lam.
HorseshoeState update_horseshoe(HorseshoeState state, const VectorXd& beta, Rng& rng);

}  // namespace midas
