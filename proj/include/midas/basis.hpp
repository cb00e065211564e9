#pragma once

#include "midas/common.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace midas {

/// MIDAS lag-weighting schemes.
///   u    unrestricted, W = I
///   br   bridge, equal weights (single column)
///   xalm exponential Almon with two parameters (single column)
///   alm  power polynomials p^l
///   leg  shifted Legendre polynomials
///   ber  Bernstein basis polynomials
///   fou  Fourier basis
enum class Scheme { u, br, xalm, alm, leg, ber, fou };

Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme s);

/// True for the families whose lag index is normalized to [0, 1].
constexpr bool uses_normalized_lag(Scheme s) {
  return s == Scheme::alm || s == Scheme::leg || s == Scheme::ber;
}

struct XalmTheta {
  double theta1 = 0;
  double theta2 = 0;
};

template <class Scalar = double>
struct MidasWeightMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Scheme scheme = Scheme::br;
  int lags = 1;    // P_H
  int degree = 0;  // polynomial degree, where meaningful
  Matrix values;   // lags x ncols
  std::optional<XalmTheta> theta;

  Index cols() const { return values.cols(); }
};

namespace detail {

template <class Scalar>
Scalar legendre(int order, Scalar x) {
  if (order == 0) return Scalar(1);
  Scalar prev = Scalar(1), cur = x;
  for (int l = 1; l < order; ++l) {
    const Scalar next = (Scalar(2 * l + 1) / Scalar(l + 1)) * x * cur - (Scalar(l) / Scalar(l + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace detail

/// Exponential Almon weights, literal sum-of-exponentials numerator
/// exp(theta1 r) + exp(theta2 r^2), normalized to sum to one. Evaluated in log space.
template <class Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xalm_weights(int lags, XalmTheta theta) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logw(lags);
  for (int r = 0; r < lags; ++r) {
    const Scalar a = Scalar(theta.theta1) * Scalar(r);
    const Scalar b = Scalar(theta.theta2) * Scalar(r) * Scalar(r);
    const Scalar hi = std::max(a, b);
    logw(r) = hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  const Scalar top = logw.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = (logw.array() - top).exp().matrix();
  return w / w.sum();
}

/// Build the P_H x ncols weight matrix for a scheme.
/// `degree` is the polynomial degree L (columns L+1) for alm/leg/ber/fou and is
/// ignored for u/br/xalm. `m` is the frequency ratio (Fourier only).
template <class Scalar = double>
MidasWeightMatrix<Scalar> build_weight_matrix(Scheme scheme, int lags, int degree, int m,
                                              std::optional<XalmTheta> theta = std::nullopt) {
  using Matrix = typename MidasWeightMatrix<Scalar>::Matrix;
  if (lags < 1) throw ConfigError("number of high-frequency lags must be >= 1");
  if (m < 1) throw ConfigError("frequency ratio m must be >= 1");
  if (scheme == Scheme::xalm && !theta) throw ConfigError("xalm weights require theta");
  const bool polynomial =
      scheme == Scheme::alm || scheme == Scheme::leg || scheme == Scheme::ber || scheme == Scheme::fou;
  if (polynomial && degree <= 0)
    throw ConfigError("polynomial degree must be >= 1 for scheme " + std::string(scheme_name(scheme)));
  if (uses_normalized_lag(scheme) && lags == 1)
    throw ConfigError("lag normalization undefined for a single lag with scheme " +
                      std::string(scheme_name(scheme)));

  MidasWeightMatrix<Scalar> w;
  w.scheme = scheme;
  w.lags = lags;
  w.degree = polynomial ? degree : 0;
  if (scheme == Scheme::xalm) w.theta = theta;

  auto norm = [lags](int p) { return Scalar(p) / Scalar(lags - 1); };
  switch (scheme) {
    case Scheme::u:
      w.values = Matrix::Identity(lags, lags);
      break;
    case Scheme::br:
      w.values = Matrix::Constant(lags, 1, Scalar(1) / Scalar(lags));
      break;
    case Scheme::xalm:
      w.values = xalm_weights<Scalar>(lags, *theta);
      break;
    case Scheme::alm:
      w.values.resize(lags, degree + 1);
      for (int p = 0; p < lags; ++p)
        for (int l = 0; l <= degree; ++l) w.values(p, l) = std::pow(norm(p), l);
      break;
    case Scheme::leg:
      w.values.resize(lags, degree + 1);
      for (int p = 0; p < lags; ++p)
        for (int l = 0; l <= degree; ++l) w.values(p, l) = detail::legendre<Scalar>(l, 2 * norm(p) - 1);
      break;
    case Scheme::ber:
      w.values.resize(lags, degree + 1);
      for (int p = 0; p < lags; ++p) {
        const Scalar x = norm(p);
        for (int l = 0; l <= degree; ++l)
          w.values(p, l) = Scalar(detail::binomial(degree, l)) * std::pow(x, l) * std::pow(1 - x, degree - l);
      }
      break;
    case Scheme::fou: {
      const Scalar freq = Scalar(2 * std::numbers::pi) / Scalar(degree * m);
      w.values.resize(lags, degree + 1);
      for (int p = 0; p < lags; ++p) {
        w.values(p, 0) = Scalar(1);
        for (int l = 1; l <= degree; ++l)
          w.values(p, l) = (l % 2 == 1) ? std::cos(Scalar(l) * freq * Scalar(p)) : std::sin(Scalar(l) * freq * Scalar(p));
      }
      break;
    }
  }
  return w;
}

/// Implied inverse-length-scale structure I_K (x) (lambda W W').
template <class Scalar = double>
struct ImpliedLengthScale {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix block;  // lambda W W', shared by all K predictors
  int predictors = 1;
  Scalar lambda = 1;

  /// Full block-diagonal (K P_H) x (K P_H) matrix.
  Matrix dense() const {
    const Index b = block.rows();
    Matrix out = Matrix::Zero(b * predictors, b * predictors);
    for (int k = 0; k < predictors; ++k) out.block(k * b, k * b, b, b) = block;
    return out;
  }
};

template <class Scalar>
ImpliedLengthScale<Scalar> implied_inverse_length_scale(const MidasWeightMatrix<Scalar>& w, Scalar lambda,
                                                        int predictors) {
  if (!(lambda > 0)) throw ConfigError("inverse length scale must be positive");
  if (predictors < 1) throw ConfigError("number of predictors must be >= 1");
  ImpliedLengthScale<Scalar> out;
  out.lambda = lambda;
  out.predictors = predictors;
  out.block = lambda * (w.values * w.values.transpose());
  // exact symmetry
  out.block = (0.5 * (out.block + out.block.transpose())).eval();
  return out;
}

}  // namespace midas
