#include "midas/volatility.hpp"

#include "midas/stats.hpp"

#include <cmath>

namespace midas {

namespace {
using Mix = LogChiSquareMixture;

// Stationary variance of h_1, finite for |phi| < 1.
double initial_variance(double phi, double sigma) { return sigma * sigma / (1.0 - phi * phi); }

struct FilterPass {
  VectorXd m, c;  // filtered mean/variance
  VectorXd a, p;  // predicted mean/variance
};

FilterPass kalman_filter(const VectorXd& ystar, const std::vector<int>& s, double mu, double phi, double sigma) {
  const Index t = ystar.size();
  if (static_cast<Index>(s.size()) != t) throw std::invalid_argument("sv: indicator length mismatch");
  FilterPass f{VectorXd(t), VectorXd(t), VectorXd(t), VectorXd(t)};
  double a = mu;
  double p = initial_variance(phi, sigma);
  for (Index i = 0; i < t; ++i) {
    f.a(i) = a;
    f.p(i) = p;
    const double v = Mix::var[s[i]];
    const double k = p / (p + v);
    f.m(i) = a + k * (ystar(i) - Mix::mean[s[i]] - a);
    f.c(i) = p * (1.0 - k);
    a = mu + phi * (f.m(i) - mu);
    p = phi * phi * f.c(i) + sigma * sigma;
  }
  return f;
}
}  // namespace

InverseGammaParams homoskedastic_posterior(const VectorXd& residuals, double a0, double b0) {
  if (!residuals.allFinite()) throw NumericalError("homoskedastic variance: non-finite residuals");
  return {a0 + 0.5 * static_cast<double>(residuals.size()), b0 + 0.5 * residuals.squaredNorm()};
}

double sample_homoskedastic_variance(const VectorXd& residuals, double a0, double b0, Rng& rng) {
  const auto post = homoskedastic_posterior(residuals, a0, b0);
  return rng.inv_gamma(post.shape, post.scale);
}

SvState SvState::initial(Index t, double log_var) {
  SvState s;
  s.h = VectorXd::Constant(t, log_var);
  s.mu = log_var;
  s.indicators.assign(t, 4);
  return s;
}

void SvState::validate() const {
  if (!(std::abs(phi) < 1)) throw NumericalError("sv: |phi| must be < 1");
  if (!(sigma >= 0)) throw NumericalError("sv: sigma must be >= 0");
  if (!h.allFinite()) throw NumericalError("sv: non-finite log-volatility path");
}

std::vector<int> sample_mixture_indicators(const VectorXd& ystar, const VectorXd& h, Rng& rng) {
  std::vector<int> out(ystar.size());
  std::array<double, 10> w{};
  for (Index i = 0; i < ystar.size(); ++i) {
    const double e = ystar(i) - h(i);
    double mx = -INFINITY;
    for (int j = 0; j < 10; ++j) {
      const double d = e - Mix::mean[j];
      w[j] = std::log(Mix::prob[j]) - 0.5 * std::log(Mix::var[j]) - 0.5 * d * d / Mix::var[j];
      mx = std::max(mx, w[j]);
    }
    double total = 0;
    for (double& x : w) total += (x = std::exp(x - mx));
    double u = rng.uniform() * total;
    int j = 0;
    while (j < 9 && (u -= w[j]) > 0) ++j;
    out[i] = j;
  }
  return out;
}

StateMoments smooth_logvol(const VectorXd& ystar, const std::vector<int>& indicators, double mu, double phi,
                           double sigma) {
  const auto f = kalman_filter(ystar, indicators, mu, phi, sigma);
  const Index t = ystar.size();
  StateMoments out{f.m, f.c};
  for (Index i = t - 2; i >= 0; --i) {
    const double pn = f.p(i + 1);
    if (pn <= 0) continue;
    const double j = f.c(i) * phi / pn;
    out.mean(i) = f.m(i) + j * (out.mean(i + 1) - f.a(i + 1));
    out.var(i) = f.c(i) + j * j * (out.var(i + 1) - pn);
  }
  return out;
}

VectorXd ffbs_logvol(const VectorXd& ystar, const std::vector<int>& indicators, double mu, double phi, double sigma,
                     Rng& rng) {
  const auto f = kalman_filter(ystar, indicators, mu, phi, sigma);
  const Index t = ystar.size();
  VectorXd h(t);
  if (t == 0) return h;
  h(t - 1) = f.m(t - 1) + std::sqrt(std::max(0.0, f.c(t - 1))) * rng.normal();
  for (Index i = t - 2; i >= 0; --i) {
    const double pn = f.p(i + 1);
    double mean = f.m(i);
    double var = f.c(i);
    if (pn > 0) {
      const double j = f.c(i) * phi / pn;
      mean += j * (h(i + 1) - f.a(i + 1));
      var -= j * phi * f.c(i);
    }
    h(i) = mean + std::sqrt(std::max(0.0, var)) * rng.normal();
  }
  return h;
}

SvState sample_sv(const VectorXd& residuals, SvState s, const SvPriors& pr, Rng& rng) {
  if (!residuals.allFinite()) throw NumericalError("sv: non-finite residuals");
  const Index t = residuals.size();
  if (s.h.size() != t) throw std::invalid_argument("sv: state length mismatch");
  const VectorXd ystar = (residuals.array().square() + pr.offset).log().matrix();

  s.indicators = sample_mixture_indicators(ystar, s.h, rng);
  s.h = ffbs_logvol(ystar, s.indicators, s.mu, s.phi, s.sigma, rng);
  if (t < 2) return s;

  const auto& h = s.h;
  const auto h_lag = h.head(t - 1);
  const auto h_cur = h.tail(t - 1);

  // mu | h, phi, sigma
  {
    const double s2 = s.sigma * s.sigma;
    const double q = 1.0 - s.phi;
    const double prec = 1.0 / pr.mu_var + (1.0 - s.phi * s.phi) / s2 + static_cast<double>(t - 1) * q * q / s2;
    const double num = pr.mu_mean / pr.mu_var + (1.0 - s.phi * s.phi) * h(0) / s2 + q * (h_cur - s.phi * h_lag).sum() / s2;
    s.mu = num / prec + rng.normal() / std::sqrt(prec);
  }

  // phi | h, mu, sigma: independence proposal from the AR regression, corrected by the
  // Beta prior and the stationary initial-state density
  {
    const VectorXd x = (h_lag.array() - s.mu).matrix();
    const VectorXd z = (h_cur.array() - s.mu).matrix();
    const double sxx = x.squaredNorm();
    if (sxx > 0) {
      const double prop = x.dot(z) / sxx + s.sigma / std::sqrt(sxx) * rng.normal();
      const double u = rng.uniform();
      if (std::abs(prop) < 1) {
        auto log_w = [&](double phi) {
          return stats::log_beta_pdf(0.5 * (phi + 1.0), pr.phi_a, pr.phi_b) +
                 stats::log_normal_pdf(h(0), s.mu, initial_variance(phi, s.sigma));
        };
        if (std::log(u) < log_w(prop) - log_w(s.phi)) s.phi = prop;
      }
    }
  }

  // sigma^2 | h, mu, phi: proposal IG(T/2 - 1, SS/2), corrected by the Gamma prior
  {
    const double ss = (h_cur.array() - s.mu - s.phi * (h_lag.array() - s.mu)).square().sum() +
                      (1.0 - s.phi * s.phi) * (h(0) - s.mu) * (h(0) - s.mu);
    const double shape = 0.5 * static_cast<double>(t) - 1.0;
    if (shape > 0 && ss > 0) {
      const double prop = rng.inv_gamma(shape, 0.5 * ss);
      const double u = rng.uniform();
      const double s2 = s.sigma * s.sigma;
      const double log_ratio = stats::log_gamma_pdf(prop, pr.sigma2_shape, pr.sigma2_rate) -
                               stats::log_gamma_pdf(s2, pr.sigma2_shape, pr.sigma2_rate);
      if (std::log(u) < log_ratio) s.sigma = std::sqrt(prop);
    }
  }
  return s;
}

double forecast_logvol(const SvState& state, int steps, Rng& rng) {
  if (state.h.size() == 0) throw std::invalid_argument("forecast_logvol: empty path");
  double h = state.h(state.h.size() - 1);
  for (int k = 0; k < steps; ++k) h = state.mu + state.phi * (h - state.mu) + state.sigma * rng.normal();
  return h;
}

}  // namespace midas
