#pragma once

#include "midas/basis.hpp"
#include "midas/config.hpp"
#include "midas/data.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace midas {

enum class DgpForm { nl, l };
enum class DgpWeights { fast, hump, eq };

struct DgpSpec {
  DgpForm form = DgpForm::nl;
  DgpWeights weights = DgpWeights::fast;
  int k = 10;
  double rho_z = 0.3;
  double rho_y = 0.3;
  double sigma2 = 0.5;
  int t_lf = 250;    // in-sample low-frequency periods
  int hf_lags = 12;
  int m = 3;
  int presample = 4;  // low-frequency periods kept before the in-sample window for lags
  int hf_burn = 200;  // high-frequency periods discarded at the start

  /// e.g. "NL-fast-K10".
  std::string id() const;
  static DgpSpec parse(std::string_view id);
  XalmTheta theta() const;
  void validate() const;
};

/// The twelve (form x weights x K) combinations.
std::vector<DgpSpec> standard_dgps();

/// f(x) for the NL form (coefficients beta1, beta2, beta3) or L form (five coefficients).
double dgp_mean(DgpForm form, const VectorXd& coef, const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct DgpTruth {
  VectorXd coef;       // 3 (NL) or 5 (L)
  VectorXd weights;    // P_H xalm weights used for compression
  MatrixXd x_tilde;    // compressed predictors per panel row (LF x K)
  VectorXd f;          // conditional mean per panel row
  double y_oos = 0;    // held-out realization
};

struct SimulatedDataset {
  MixedFrequencyPanel panel;  // release lags 0; last LF row is the held-out period
  DgpTruth truth;
  int first_row = 0;  // first in-sample LF row
  int oos_row = 0;    // held-out LF row
};

/// Random stream for replication `rep` of `spec` under a study seed.
Rng panel_stream(std::uint64_t seed, const DgpSpec& spec, int rep);

/// `coef` overrides the coefficient draw when given.
SimulatedDataset simulate_dgp(const DgpSpec& spec, Rng& rng, std::optional<VectorXd> coef = std::nullopt);

struct StudyModel {
  std::string label;  // column name in the loss grid
  ModelConfig config;
};

struct ReplicationOutcome {
  std::string dgp;
  std::string model;
  int rep = 0;
  double crps = 0;
  double mae = 0;
  bool failed = false;
  std::string error;
};

struct StudyCell {
  double mean_crps = 0;
  double mean_mae = 0;
  int succeeded = 0;
  int failed = 0;
  bool flagged = false;  // more than 5% of replications failed
};

struct StudyResult {
  std::vector<std::string> dgps;
  std::vector<std::string> models;
  std::vector<std::vector<StudyCell>> cells;  // [dgp][model]
  std::vector<ReplicationOutcome> outcomes;
};

struct StudyOptions {
  int replications = 50;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Fits every model on every replication of every DGP and scores the held-out period.
/// Streams: panels from (seed, dgp, rep), chains from (seed, dgp, rep, model config).
StudyResult run_replication_study(const std::vector<DgpSpec>& specs, const std::vector<StudyModel>& models,
                                  const StudyOptions& options);

/// Loss grid: rows = DGPs, columns = models; ratios to `benchmark` if non-empty.
void write_loss_grid(const std::filesystem::path& path, const StudyResult& result, const std::string& metric,
                     const std::string& benchmark);

}  // namespace midas
