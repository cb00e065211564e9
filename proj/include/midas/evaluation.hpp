#pragma once

#include "midas/common.hpp"
#include "midas/data.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace midas {

enum class CrpsWeighting { equal, left, right };

CrpsWeighting parse_crps_weighting(std::string_view s);
std::string_view crps_weighting_name(CrpsWeighting w);

/// QS_tau = 2 (y - yhat)(tau - 1{y <= yhat}).
double quantile_score(double y, double yhat, double tau);

/// The 91 quantile levels 0.05, 0.06, ..., 0.95.
const std::vector<double>& crps_tau_grid();
double crps_weight(double tau, CrpsWeighting w);

/// Mean over the tau grid of w_tau * QS_tau, with quantiles taken from `draws` (type 7).
double weighted_crps(std::span<const double> draws, double y, CrpsWeighting w = CrpsWeighting::equal);
/// Same sum given the quantiles at each grid level.
double weighted_crps_from_quantiles(std::span<const double> quantiles, double y, CrpsWeighting w = CrpsWeighting::equal);

struct DmResult {
  double statistic = 0;
  double p_value = 1;
  bool defined = false;  // false for a zero-variance differential
  int stars = 0;         // 1, 2, 3 for 5%, 1%, 0.1%
};

/// Diebold-Mariano test on d_t = a_t - b_t with Bartlett HAC variance using `hac_lag`
/// autocovariances. Two-sided normal p-value, or t_{n-1} with the Harvey et al. correction.
DmResult dm_test(std::span<const double> a, std::span<const double> b, int hac_lag, bool harvey = false);

/// HAC lag for a horizon: floor(h).
inline int dm_hac_lag(const Horizon& h) { return h.lf_shift(); }

int significance_stars(double p_value);

struct McsConfig {
  double alpha = 0.10;
  int block = 4;
  int replicates = 5000;
  std::uint64_t seed = 1;
};

struct McsResult {
  std::vector<bool> included;        // per model
  std::vector<int> elimination_order;
  std::vector<double> p_values;      // MCS p-value per model
};

/// Model confidence set with the range statistic T_R and a moving-block bootstrap.
/// `losses` is T x J.
McsResult model_confidence_set(const MatrixXd& losses, const McsConfig& config = {});

struct RecessionCalendar {
  std::vector<std::pair<Date, Date>> intervals;  // inclusive

  static RecessionCalendar read(const std::filesystem::path& path);
  bool covers(const Date& d) const;
  bool in_recession(const Date& d) const;
};

struct SubsampleMasks {
  std::vector<bool> full, pre_covid, post_covid, recession, expansion;
  std::vector<std::string> warnings;
};

/// Full, PreCovid (before 2020-01-01), PostCovid, Recession, Expansion.
SubsampleMasks subsample_masks(const std::vector<Date>& dates, const RecessionCalendar& calendar);

struct DummyRegressionResult {
  std::vector<std::string> names;  // "category=level", baselines omitted
  VectorXd coef;                   // OLS coefficients x 100
  VectorXd se;                     // HC1 standard errors x 100
  std::vector<int> stars;
  double intercept = 0;            // not scaled
};

/// Regress `y` on dummies for every non-baseline level of each category (plus an intercept).
/// `levels[i][c]` is row i's level of category c.
DummyRegressionResult dummy_regression(const VectorXd& y, const std::vector<std::vector<std::string>>& levels,
                                       const std::vector<std::string>& categories,
                                       const std::vector<std::string>& baselines);

struct LossRecord {
  std::string model;
  std::string origin;
  std::string h;
  std::string subsample;
  std::string metric;
  double value = 0;
};

void write_loss_table(const std::filesystem::path& path, const std::vector<LossRecord>& rows);

}  // namespace midas
