#pragma once

#include "midas/common.hpp"
#include "midas/linalg.hpp"

#include <cmath>
#include <numbers>

namespace midas {

/// Squared-exponential kernel hyperparameters: signal variance xi and common
/// inverse length scale lambda.
struct KernelHyper {
  double xi = 1;
  double lambda = 1;
};

/// Gamma priors xi ~ G(a_xi, a_xi/b_xi), lambda ~ G(a_lambda, a_lambda/b_lambda)
/// (shape/rate, so the prior means are b_xi and b_lambda).
struct KernelPrior {
  double a_xi = 0.5;
  double b_xi = 1.0;
  double a_lambda = 0.5;
  double b_lambda = 0.1;

  /// b_lambda = 0.1 * s_y^2, with s_y^2 the AR(1) residual variance of the standardized target.
  static KernelPrior from_residual_variance(double s2) {
    KernelPrior p;
    p.b_lambda = 0.1 * s2;
    return p;
  }
  double log_density(const KernelHyper& k) const;
};

/// Least-squares AR(1) residual variance of a standardized series, clamped to (0, 1].
double ar1_residual_variance(const VectorXd& y);

template <class Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using DynVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Pairwise squared Euclidean distances, computed from explicit differences so
/// that identical rows give exactly zero.
template <class DA, class DB>
DynMatrix<typename DA::Scalar> squared_distances(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.cols() != b.cols()) throw std::invalid_argument("squared_distances: inputs differ in dimension");
  DynMatrix<Scalar> d(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

template <class Derived>
DynMatrix<typename Derived::Scalar> se_kernel_from_distances(const Eigen::MatrixBase<Derived>& sqdist,
                                                             const KernelHyper& k) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(k.xi) * (Scalar(-0.5 * k.lambda) * sqdist.array()).exp()).matrix();
}

/// K(a, b) = xi * exp(-(lambda/2) * ||a - b||^2).
template <class DA, class DB>
DynMatrix<typename DA::Scalar> se_kernel_gram(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                                              const KernelHyper& k) {
  return se_kernel_from_distances(squared_distances(a, b), k);
}

/// Squared-exponential kernel with a general (PSD) metric: xi * exp(-1/2 (a-b)' Lambda (a-b)).
template <class DA, class DB, class DL>
DynMatrix<typename DA::Scalar> se_kernel_gram_metric(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                                                     const Eigen::MatrixBase<DL>& metric, double xi) {
  using Scalar = typename DA::Scalar;
  DynMatrix<Scalar> out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      const DynVector<Scalar> diff = (a.row(i) - b.row(j)).transpose();
      out(i, j) = Scalar(xi) * std::exp(Scalar(-0.5) * diff.dot(metric * diff));
    }
  return out;
}

template <class Scalar = double>
struct GpPosterior {
  DynVector<Scalar> mean;
  DynMatrix<Scalar> cov;
  Scalar cholesky_jitter_used = 0;
};

/// Gaussian conditioning of test function values on noisy training targets.
/// `k_cross` is K(test, train); `noise` holds the diagonal of Sigma.
template <class Scalar>
GpPosterior<Scalar> gp_conditional_moments(const DynMatrix<Scalar>& k_train, const DynMatrix<Scalar>& k_cross,
                                           const DynMatrix<Scalar>& k_test, const DynVector<Scalar>& noise,
                                           const DynVector<Scalar>& y) {
  const Index n = k_train.rows();
  if (k_train.cols() != n || noise.size() != n || y.size() != n || k_cross.cols() != n ||
      k_test.rows() != k_cross.rows() || k_test.cols() != k_cross.rows())
    throw std::invalid_argument("gp_conditional_moments: dimension mismatch");
  DynMatrix<Scalar> a = k_train;
  a.diagonal() += noise;
  const JitteredCholesky<Scalar> chol(a);
  GpPosterior<Scalar> post;
  post.cholesky_jitter_used = chol.jitter;
  post.mean = k_cross * chol.llt.solve(y);
  const DynMatrix<Scalar> v = chol.llt.matrixL().solve(k_cross.transpose());
  post.cov = k_test - v.transpose() * v;
  post.cov = (Scalar(0.5) * (post.cov + post.cov.transpose())).eval();
  return post;
}

/// One draw mean + L z with L the (jittered) Cholesky factor of the covariance.
template <class Scalar>
DynVector<Scalar> sample_function_values(const GpPosterior<Scalar>& post, Rng& rng) {
  const Index n = post.mean.size();
  DynVector<Scalar> z(n);
  for (Index i = 0; i < n; ++i) z(i) = Scalar(rng.normal());
  if (post.cov.isZero(0)) return post.mean;
  const JitteredCholesky<Scalar> chol(post.cov);
  return post.mean + chol.llt.matrixL() * z;
}

/// log N(y; 0, K + Sigma).
template <class Scalar>
Scalar gp_log_marginal(const DynVector<Scalar>& y, const DynMatrix<Scalar>& k_train, const DynVector<Scalar>& noise) {
  const Index n = y.size();
  if (n == 0) return Scalar(0);
  DynMatrix<Scalar> a = k_train;
  a.diagonal() += noise;
  const JitteredCholesky<Scalar> chol(a);
  const DynVector<Scalar> w = chol.llt.matrixL().solve(y);
  return Scalar(-0.5) * w.squaredNorm() - Scalar(0.5) * chol.log_det() -
         Scalar(0.5 * n * std::log(2 * std::numbers::pi));
}

struct MhOutcome {
  bool accepted = false;
  bool failed = false;  // numerical failure evaluating the proposal
};

/// One random-walk MH update of (xi, lambda) on the log scale, targeting
/// p(y | xi, lambda, Sigma) p(xi) p(lambda). `sqdist` are squared distances of the
/// training inputs; an empty y reduces the target to the prior.
KernelHyper mh_update_kernel_hyper(const KernelHyper& current, const MatrixXd& sqdist, const VectorXd& y,
                                   const VectorXd& noise, const KernelPrior& prior, double step_xi,
                                   double step_lambda, Rng& rng, MhOutcome* outcome = nullptr);

}  // namespace midas
