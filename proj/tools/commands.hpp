#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace midas::cli {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, applied after the config file
  int threads = 1;
  std::filesystem::path out_dir = ".";
};

struct SimulateOptions {
  std::vector<std::string> dgps;  // empty: all twelve
  int replications = 50;
  int t_lf = 250;
  std::vector<std::string> models{"GP-xalm", "GP-br", "BLR-br", "BART-br"};
  std::string benchmark;
  bool panels_only = false;
};

struct FitOptions {
  std::string lf_path;
  std::string hf_path;
  std::string lf_schema;
  std::string hf_schema;
  std::string target;
  std::string target_date;  // default: last low-frequency period
  std::string output = "draws.mcol";
};

struct PredictOptions {
  std::string draws_path;
  std::string label;
  std::string draws_csv = "predictive_draws.csv";
  std::string quantile_csv = "predictive_quantiles.csv";
};

struct EvaluateOptions {
  std::vector<std::string> predictions;
  std::string recessions;
  std::string benchmark;
  int mcs_replicates = 5000;
  int mcs_block = 4;
  double mcs_alpha = 0.10;
  bool harvey = false;
};

struct ImportanceOptions {
  std::vector<std::string> draws;
  int folds = 5;
};

int simulate(const GlobalOptions& g, const SimulateOptions& o);
int fit(const GlobalOptions& g, const FitOptions& o);
int predict(const GlobalOptions& g, const PredictOptions& o);
int evaluate(const GlobalOptions& g, const EvaluateOptions& o);
int importance(const GlobalOptions& g, const ImportanceOptions& o);

/// Version string of the form v<major.minor.patch>[-g<commit>].
std::string version();

}  // namespace midas::cli
