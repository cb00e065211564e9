#pragma once

#include "midas/common.hpp"

#include <array>
#include <vector>

namespace midas {

/// Ten-component normal mixture approximating log chi^2_1 (Omori, Chib, Shephard, Nakajima 2007).
struct LogChiSquareMixture {
  static constexpr std::array<double, 10> prob = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                                  0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
  static constexpr std::array<double, 10> mean = {1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                                  -1.97278, -3.46788, -5.55246, -8.68384, -14.65000};
  static constexpr std::array<double, 10> var = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                                 0.98583, 1.57469, 2.54498, 4.16591, 7.33342};
};

struct InverseGammaParams {
  double shape;
  double scale;
};

/// sigma^2 | eps ~ IG(a0 + T/2, b0 + SS/2).
InverseGammaParams homoskedastic_posterior(const VectorXd& residuals, double a0, double b0);
double sample_homoskedastic_variance(const VectorXd& residuals, double a0, double b0, Rng& rng);

struct SvPriors {
  double mu_mean = 0;
  double mu_var = 10;
  double phi_a = 5;  // (phi + 1)/2 ~ Beta(phi_a, phi_b)
  double phi_b = 1.5;
  double sigma2_shape = 0.5;  // sigma^2 ~ Gamma(shape, rate)
  double sigma2_rate = 0.5;
  double offset = 1e-6;  // log(eps^2 + offset)
};

/// Log-volatility AR(1): h_t = mu + phi (h_{t-1} - mu) + sigma eta_t, h_1 stationary.
struct SvState {
  VectorXd h;
  double mu = 0;
  double phi = 0.9;
  double sigma = 0.3;
  std::vector<int> indicators;

  /// Flat path at `log_var` with mu = log_var.
  static SvState initial(Index t, double log_var);
  VectorXd variances() const { return h.array().exp().matrix(); }
  void validate() const;
};

/// Component draws s_t given observations y*_t = log(eps_t^2 + c) and the path h.
std::vector<int> sample_mixture_indicators(const VectorXd& ystar, const VectorXd& h, Rng& rng);

struct StateMoments {
  VectorXd mean;
  VectorXd var;
};

/// Smoothed moments of h given y*_t = h_t + m_{s_t} + e_t, e_t ~ N(0, v_{s_t}).
StateMoments smooth_logvol(const VectorXd& ystar, const std::vector<int>& indicators, double mu, double phi,
                           double sigma);

/// Forward-filter backward-sample draw of h under the same model.
VectorXd ffbs_logvol(const VectorXd& ystar, const std::vector<int>& indicators, double mu, double phi, double sigma,
                     Rng& rng);

/// One full update: indicators, path, then (mu, phi, sigma).
SvState sample_sv(const VectorXd& residuals, SvState state, const SvPriors& priors, Rng& rng);

/// Draw h_{T+steps} by iterating the state equation from the last path value.
double forecast_logvol(const SvState& state, int steps, Rng& rng);

}  // namespace midas
