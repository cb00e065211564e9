#include "midas/blr.hpp"

#include "midas/linalg.hpp"

#include <algorithm>

namespace midas {

namespace {
constexpr double kFloor = 1e-12;

void check_dims(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var) {
  if (y.size() != x.rows() || noise.size() != x.rows() || prior_var.size() != x.cols())
    throw std::invalid_argument("blr: dimension mismatch");
}
}  // namespace

VectorXd HorseshoeState::prior_variances() const {
  return (tau2 * lam2.array()).max(kFloor).matrix();
}

GaussianMoments blr_posterior_moments(const MatrixXd& x, const VectorXd& y, const VectorXd& noise,
                                      const VectorXd& prior_var) {
  check_dims(x, y, noise, prior_var);
  const VectorXd w = noise.array().max(kFloor).inverse().matrix();
  MatrixXd precision = x.transpose() * w.asDiagonal() * x;
  precision.diagonal() += prior_var.array().max(kFloor).inverse().matrix();
  const JitteredCholesky<double> chol(precision);
  GaussianMoments out;
  out.cov = chol.llt.solve(MatrixXd::Identity(x.cols(), x.cols()));
  out.mean = chol.llt.solve(x.transpose() * w.asDiagonal() * y);
  return out;
}

VectorXd sample_beta_dense(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                           Rng& rng) {
  check_dims(x, y, noise, prior_var);
  const VectorXd w = noise.array().max(kFloor).inverse().matrix();
  MatrixXd precision = x.transpose() * w.asDiagonal() * x;
  precision.diagonal() += prior_var.array().max(kFloor).inverse().matrix();
  const JitteredCholesky<double> chol(precision);
  // precision = L L'; beta = mean + L'^{-1} z
  const VectorXd mean = chol.llt.solve(x.transpose() * w.asDiagonal() * y);
  const VectorXd z = rng.normal_vector(x.cols());
  return mean + chol.llt.matrixU().solve(z);
}

VectorXd sample_beta_fast(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                          Rng& rng) {
  check_dims(x, y, noise, prior_var);
  const Index t = x.rows();
  const Index m = x.cols();
  const VectorXd inv_sd = noise.array().max(kFloor).rsqrt().matrix();
  const MatrixXd xs = inv_sd.asDiagonal() * x;  // Sigma^{-1/2} X
  const VectorXd ys = inv_sd.cwiseProduct(y);
  const VectorXd d = prior_var.array().max(kFloor).matrix();

  VectorXd u(m);
  for (Index j = 0; j < m; ++j) u(j) = std::sqrt(d(j)) * rng.normal();
  const VectorXd delta = rng.normal_vector(t);
  const VectorXd v = xs * u + delta;
  MatrixXd gram = xs * d.asDiagonal() * xs.transpose();
  gram.diagonal().array() += 1.0;
  const JitteredCholesky<double> chol(gram);
  const VectorXd w = chol.llt.solve(ys - v);
  return u + d.asDiagonal() * (xs.transpose() * w);
}

VectorXd sample_beta(const MatrixXd& x, const VectorXd& y, const VectorXd& noise, const VectorXd& prior_var,
                     Rng& rng) {
  if (x.rows() < x.cols()) return sample_beta_fast(x, y, noise, prior_var, rng);
  return sample_beta_dense(x, y, noise, prior_var, rng);
}

HorseshoeState update_horseshoe(HorseshoeState s, const VectorXd& beta, Rng& rng) {
  const Index m = beta.size();
  if (s.lam2.size() != m) throw std::invalid_argument("update_horseshoe: dimension mismatch");
  s.beta = beta;
  const VectorXd b2 = beta.array().square().matrix();

  const double scaled = (b2.array() / s.lam2.array()).sum();
  s.tau2 = std::max(kFloor, rng.inv_gamma(0.5 * static_cast<double>(m + 1), 1.0 / s.aux_tau + 0.5 * scaled));
  for (Index j = 0; j < m; ++j)
    s.lam2(j) = std::max(kFloor, rng.inv_gamma(1.0, 1.0 / s.aux_lam(j) + b2(j) / (2.0 * s.tau2)));
  s.aux_tau = std::max(kFloor, rng.inv_gamma(1.0, 1.0 + 1.0 / s.tau2));
  for (Index j = 0; j < m; ++j) s.aux_lam(j) = std::max(kFloor, rng.inv_gamma(1.0, 1.0 + 1.0 / s.lam2(j)));
  return s;
}

}  // namespace midas
