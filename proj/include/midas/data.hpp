#pragma once

#include "midas/basis.hpp"
#include "midas/common.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace midas {

/// Calendar date (ISO yyyy-mm-dd). Quarterly data are keyed by the first day of the quarter.
struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view text);  // accepts yyyy-mm-dd, yyyy-mm, yyyyQn
  std::string iso() const;
  int month_index() const { return year * 12 + month - 1; }
  int quarter_index() const { return year * 4 + (month - 1) / 3; }
  auto operator<=>(const Date&) const = default;
};

enum class Frequency { monthly, quarterly, annual };
Frequency parse_frequency(std::string_view tag);
int periods_per_year(Frequency f);

/// Forecast horizon in high-frequency steps (h = steps / m low-frequency periods).
struct Horizon {
  int steps = 0;
  int m = 3;

  /// Parses "0", "1/3", "4/3", "1", ... for the given m.
  static Horizon parse(std::string_view text, int m);
  double value() const { return static_cast<double>(steps) / m; }
  /// Whole low-frequency periods skipped by the horizon (floor(h)).
  int lf_shift() const { return steps / m; }
  std::string str() const;
};

/// Low-frequency target plus high-frequency predictor panel, aligned so that
/// low-frequency period t covers high-frequency rows m*t .. m*t + m - 1.
struct MixedFrequencyPanel {
  VectorXd y;  // T_L, NaN marks not-yet-released periods at the end
  MatrixXd z;  // T_H x K, NaN marks the ragged edge at the end
  int m = 3;
  std::vector<std::string> names;
  std::vector<int> release_lag;  // publication delay in HF periods, per series
  std::vector<Date> dates;       // LF period labels (optional)
  std::string target_name = "y";

  Index lf_periods() const { return y.size(); }
  Index predictors() const { return z.cols(); }
  void validate() const;
};

/// Stationarity transformation codes 1..8 (FRED-MD/QD convention). Leading
/// undefined entries are NaN.
VectorXd transform_series(const VectorXd& x, int code, std::string_view name = "series");

/// High-frequency lags of one predictor available at origin (t, h), most recent first:
/// lag p sits at HF row m*t + m - 1 - h.steps - release_lag - p.
VectorXd build_hf_lag_vector(const VectorXd& z_k, int t, Horizon h, int lags, int m, int release_lag = 1);

/// Smallest low-frequency index for which all lags of every series exist.
int first_feasible_row(const MixedFrequencyPanel& panel, int lf_lags, int hf_lags, Horizon h);

/// Raw (uncompressed, unstandardized) regressors for a set of low-frequency rows.
struct LagData {
  std::vector<int> rows;        // LF indices
  VectorXd y;                   // target at each row (NaN if unreleased)
  MatrixXd ylags;               // rows x P_L : y_{t-1-floor(h)}, ...
  std::vector<MatrixXd> hf;     // K blocks, rows x P_H

  Index size() const { return static_cast<Index>(rows.size()); }
  /// [ylags, hf_1 W, ..., hf_K W] without standardization.
  MatrixXd compress(const MatrixXd& w) const;
};

LagData build_lag_data(const MixedFrequencyPanel& panel, const std::vector<int>& rows, int lf_lags, int hf_lags,
                       Horizon h);

/// Column-wise standardization fitted on the training window.
struct Standardizer {
  VectorXd mean;
  VectorXd sd;
  double y_mean = 0;
  double y_sd = 1;

  static Standardizer fit(const MatrixXd& x, const VectorXd& y);
  MatrixXd apply(const MatrixXd& x) const;
  VectorXd apply_y(const VectorXd& y) const { return ((y.array() - y_mean) / y_sd).matrix(); }
  double destandardize(double d) const { return y_mean + y_sd * d; }
  VectorXd destandardize(const VectorXd& d) const { return (y_mean + y_sd * d.array()).matrix(); }
};

struct DesignMatrix {
  MatrixXd x;       // standardized training regressors, T_eff x M
  VectorXd y;       // standardized training target
  MatrixXd x_test;  // standardized test regressors (possibly 0 rows)
  Horizon h;
  Standardizer standardizer;
  int lf_lags = 0;
  int hf_lags = 0;
  Index cols_per_predictor = 0;
  bool underdetermined = false;  // T_eff < M
  LagData train;
  LagData test;
  std::vector<std::string> column_names;
  std::vector<int> column_group;  // 0 = target lags, k+1 = predictor k
  std::vector<std::string> group_names;

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  /// Recompute x / x_test (and the standardizer's regressor moments) for new weights.
  void recompress(const MatrixXd& w);
};

/// All feasible rows with a released target form the training sample.
DesignMatrix assemble_design(const MixedFrequencyPanel& panel, const MidasWeightMatrix<double>& w, int lf_lags,
                             int hf_lags, Horizon h);

/// Explicit training and test rows (pseudo-out-of-sample origins).
DesignMatrix assemble_design(const MixedFrequencyPanel& panel, const MidasWeightMatrix<double>& w, int lf_lags,
                             int hf_lags, Horizon h, const std::vector<int>& train_rows,
                             const std::vector<int>& test_rows);

/// Training rows available when predicting target period `target` at horizon h:
/// every feasible t <= target - 1 - floor(h) with a released target.
std::vector<int> training_rows_for_target(const MixedFrequencyPanel& panel, int lf_lags, int hf_lags, Horizon h,
                                          int target);

// --- file ingestion --------------------------------------------------------

struct SeriesSchema {
  std::string date_column = "date";
  Frequency frequency = Frequency::monthly;
  std::map<std::string, int> transform;    // column -> code (default 1)
  std::map<std::string, int> release_lag;  // column -> HF periods (default 1)

  static SeriesSchema read(const std::filesystem::path& path);
};

struct SeriesTable {
  std::vector<Date> dates;
  std::vector<std::string> names;
  MatrixXd values;  // dates x names, transformed
  Frequency frequency = Frequency::monthly;
  std::vector<int> release_lag;
};

/// Reads a header-row CSV with ISO dates, applies the schema's transformation
/// codes and trims leading rows in which any series is missing.
SeriesTable ingest_csv(const std::filesystem::path& path, const SeriesSchema& schema);

/// Aligns a low-frequency target column with a high-frequency predictor table.
MixedFrequencyPanel make_panel(const SeriesTable& lf, const std::string& target, const SeriesTable& hf,
                               const std::vector<std::string>& predictors = {});

}  // namespace midas
