#include "midas/gp.hpp"

#include "midas/stats.hpp"

#include <algorithm>
#include <limits>

namespace midas {

double KernelPrior::log_density(const KernelHyper& k) const {
  return stats::log_gamma_pdf(k.xi, a_xi, a_xi / b_xi) + stats::log_gamma_pdf(k.lambda, a_lambda, a_lambda / b_lambda);
}

double ar1_residual_variance(const VectorXd& y) {
  const Index n = y.size();
  if (n < 3) return 1.0;
  const auto lag = y.head(n - 1);
  const auto cur = y.tail(n - 1);
  const double denom = lag.squaredNorm();
  const double rho = denom > 0 ? lag.dot(cur) / denom : 0.0;
  const double s2 = (cur - rho * lag).squaredNorm() / static_cast<double>(n - 1);
  return std::clamp(s2, 1e-6, 1.0);
}

namespace {

double log_target(const KernelHyper& k, const MatrixXd& sqdist, const VectorXd& y, const VectorXd& noise,
                  const KernelPrior& prior) {
  double lp = prior.log_density(k) + std::log(k.xi) + std::log(k.lambda);  // log-scale Jacobian
  if (y.size() > 0) lp += gp_log_marginal<double>(y, se_kernel_from_distances(sqdist, k), noise);
  return lp;
}

}  // namespace

KernelHyper mh_update_kernel_hyper(const KernelHyper& current, const MatrixXd& sqdist, const VectorXd& y,
                                   const VectorXd& noise, const KernelPrior& prior, double step_xi,
                                   double step_lambda, Rng& rng, MhOutcome* outcome) {
  MhOutcome local;
  MhOutcome& out = outcome ? *outcome : local;
  out = {};
  KernelHyper proposal{current.xi * std::exp(step_xi * rng.normal()),
                       current.lambda * std::exp(step_lambda * rng.normal())};
  const double u = rng.uniform();
  if (step_xi == 0 && step_lambda == 0) {
    out.accepted = true;
    return current;
  }
  double lp_new;
  try {
    lp_new = log_target(proposal, sqdist, y, noise, prior);
  } catch (const NumericalError&) {
    out.failed = true;
    return current;
  }
  const double lp_old = log_target(current, sqdist, y, noise, prior);
  if (!std::isfinite(lp_new)) return current;
  if (std::log(u) < lp_new - lp_old) {
    out.accepted = true;
    return proposal;
  }
  return current;
}

}  // namespace midas
