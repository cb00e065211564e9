#pragma once

#include "midas/common.hpp"

#include <span>
#include <vector>

namespace midas::stats {

double normal_cdf(double x);
/// Inverse standard normal CDF (Acklam's rational approximation, refined by one Halley step).
double normal_quantile(double p);
/// Student-t CDF with `dof` degrees of freedom.
double student_t_cdf(double x, double dof);
/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Log densities. Gamma uses shape/rate.
double log_gamma_pdf(double x, double shape, double rate);
double log_beta_pdf(double x, double a, double b);
double log_normal_pdf(double x, double mean, double var);

/// Type-7 empirical quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double tau);
/// Type-7 empirical quantile (copies and sorts).
double quantile(std::span<const double> values, double tau);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // n-1 denominator
double correlation(std::span<const double> a, std::span<const double> b);

/// Inefficiency factor 1 + 2 * sum of autocorrelations, Bartlett-tapered up to `max_lag`
/// (default max(10, n/25)).
double inefficiency_factor(std::span<const double> chain, int max_lag = -1);

}  // namespace midas::stats
