#include "commands.hpp"

#include "midas/common.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace midas;
  CLI::App app{"Bayesian mixed-frequency nowcasting", "midasgp"};
  app.set_version_flag("--version", cli::version());
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  cli::GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config's seed)");
  app.add_option("--config", g.config_path, "Flat key=value model config")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for artifacts");

  cli::SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "Replication study on synthetic DGPs -> loss grids");
  sim->add_option("--dgp", so.dgps, "DGP id such as NL-fast-K10 (repeatable; default all twelve)");
  sim->add_option("--R", so.replications, "Replications per DGP");
  sim->add_option("--t-lf", so.t_lf, "In-sample low-frequency periods");
  sim->add_option("--models", so.models, "Model labels such as GP-xalm, BLR-sv-br")->delimiter(',');
  sim->add_option("--benchmark", so.benchmark, "Report losses relative to this model label");
  sim->add_flag("--panels-only", so.panels_only, "Write the simulated panels as CSV and stop");

  cli::FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Run the sampler for one model and target period -> draws file");
  fit->add_option("--lf", fo.lf_path, "Low-frequency CSV (target)")->required()->check(CLI::ExistingFile);
  fit->add_option("--hf", fo.hf_path, "High-frequency CSV (predictors)")->required()->check(CLI::ExistingFile);
  fit->add_option("--lf-schema", fo.lf_schema, "Schema for the low-frequency file")->check(CLI::ExistingFile);
  fit->add_option("--hf-schema", fo.hf_schema, "Schema for the high-frequency file")->check(CLI::ExistingFile);
  fit->add_option("--target", fo.target, "Target column in the low-frequency file");
  fit->add_option("--target-date", fo.target_date, "Low-frequency period to predict (default: last)");
  fit->add_option("--output", fo.output, "Draws file name inside --out-dir");

  cli::PredictOptions po;
  auto* pred = app.add_subcommand("predict", "Predictive draws and quantiles from a draws file");
  pred->add_option("--draws", po.draws_path, "Draws file written by fit")->required()->check(CLI::ExistingFile);
  pred->add_option("--label", po.label, "Model label (default: model id)");
  pred->add_option("--draws-csv", po.draws_csv, "Predictive-draw CSV name");
  pred->add_option("--quantiles-csv", po.quantile_csv, "Quantile CSV name");

  cli::EvaluateOptions eo;
  auto* eval = app.add_subcommand("evaluate", "Loss table, DM tests, MCS and dummy regression");
  eval->add_option("--predictions", eo.predictions, "Quantile CSVs written by predict")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--recessions", eo.recessions, "Recession calendar CSV (start,end)")->check(CLI::ExistingFile);
  eval->add_option("--benchmark", eo.benchmark, "Benchmark model for DM tests (default: first model)");
  eval->add_option("--mcs-replicates", eo.mcs_replicates, "MCS bootstrap replicates");
  eval->add_option("--mcs-block", eo.mcs_block, "MCS bootstrap block length");
  eval->add_option("--mcs-alpha", eo.mcs_alpha, "MCS significance level");
  eval->add_flag("--harvey", eo.harvey, "Small-sample DM correction");

  cli::ImportanceOptions io;
  auto* imp = app.add_subcommand("importance", "Lasso surrogate importance over holdout draws files");
  imp->add_option("--draws", io.draws, "Draws files, one per holdout origin")->required()->check(CLI::ExistingFile);
  imp->add_option("--folds", io.folds, "Cross-validation folds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  g.out_dir = out_dir;

  try {
    if (*sim) return cli::simulate(g, so);
    if (*fit) return cli::fit(g, fo);
    if (*pred) return cli::predict(g, po);
    if (*eval) return cli::evaluate(g, eo);
    if (*imp) return cli::importance(g, io);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
