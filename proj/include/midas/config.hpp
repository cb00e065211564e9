#pragma once

#include "midas/bart.hpp"
#include "midas/basis.hpp"
#include "midas/data.hpp"
#include "midas/volatility.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace midas {

enum class MeanModel { blr, gp, bart };
enum class VarianceModel { hom, sv };

MeanModel parse_mean_model(std::string_view s);
VarianceModel parse_variance_model(std::string_view s);
std::string_view mean_model_name(MeanModel m);      // BLR, GP, BART
std::string_view variance_model_name(VarianceModel v);  // hom, sv

struct McmcSettings {
  int iters = 12000;
  int burn = 3000;
  int thin = 3;

  int retained() const { return (iters - burn) / thin; }
  /// Iteration `it` (0-based) is kept when it is the thin-th, 2*thin-th, ... draw after burn-in.
  bool keep(int it) const { return it >= burn && (it - burn + 1) % thin == 0; }
  void validate() const;
};

struct ModelConfig {
  MeanModel mean = MeanModel::gp;
  VarianceModel variance = VarianceModel::hom;
  Scheme scheme = Scheme::br;
  int degree = 3;
  std::string info_set = "s";
  std::vector<std::string> predictors;  // empty: every predictor in the panel
  int lf_lags = 4;
  int hf_lags = 12;
  int m = 3;
  Horizon horizon{0, 3};
  McmcSettings mcmc;
  std::uint64_t seed = 1;

  // homoskedastic inverse-gamma prior
  double a0 = 0.01;
  double b0 = 0.01;
  // xalm
  XalmTheta theta_init{};
  double theta_prior_sd = 0.1;
  double theta_step = 0.05;
  // GP kernel random-walk scale (log space)
  double kernel_step = 0.3;
  bool adapt = true;  // tune random-walk scales during burn-in

  BartConfig bart;
  SvPriors sv;
  double max_failure_rate = 0.01;

  /// mean-variance-midas-size, e.g. GP-sv-xalm-s.
  std::string id() const;
  void validate() const;
  MidasWeightMatrix<double> weights(std::optional<XalmTheta> theta = std::nullopt) const;

  /// Canonical sorted key=value rendering (covers every field; used for hashing).
  std::map<std::string, std::string> to_key_values() const;
  std::string canonical() const;
  /// Overlay keys onto the defaults; unknown keys raise ConfigError.
  static ModelConfig from_key_values(const std::map<std::string, std::string>& kv);
  static ModelConfig load(const std::filesystem::path& path);
};

}  // namespace midas
