#include "commands.hpp"

#include "midas/dgp.hpp"
#include "midas/evaluation.hpp"
#include "midas/io.hpp"
#include "midas/sampler.hpp"
#include "midas/stats.hpp"
#include "midas/varimp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#ifndef MIDAS_VERSION_DESCRIBE
#define MIDAS_VERSION_DESCRIBE "v" MIDAS_VERSION
#endif

namespace midas::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return MIDAS_VERSION_DESCRIBE; }

namespace {

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string tau_text(double tau) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", tau);
  return buf;
}

ModelConfig load_config(const GlobalOptions& g) {
  std::map<std::string, std::string> kv;
  if (!g.config_path.empty()) kv = read_key_values(g.config_path);
  for (const auto& o : g.overrides) {
    const auto p = parse_key_value(o);
    if (!p) throw ConfigError("malformed --set '" + o + "' (expected key=value)");
    kv[p->first] = p->second;
  }
  ModelConfig cfg = ModelConfig::from_key_values(kv);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::uint32_t hash32(std::string_view s) { return static_cast<std::uint32_t>(fnv1a(s)); }

/// Run manifest: everything needed to reproduce a command's artifacts. No clocks, no absolute paths.
class Manifest {
 public:
  Manifest(std::string command, const GlobalOptions& g, std::uint64_t seed) : out_dir_(g.out_dir) {
    doc_["tool"] = "midasgp";
    doc_["version"] = version();
    doc_["command"] = std::move(command);
    doc_["seed"] = seed;
    doc_["threads"] = g.threads;
    if (!g.config_path.empty()) doc_["config_file"] = g.config_path;
    doc_["overrides"] = g.overrides;
    doc_["inputs"] = json::array();
    doc_["artifacts"] = json::array();
  }
  void config(const ModelConfig& cfg) {
    doc_["config_hash"] = hex64(fnv1a(cfg.canonical()));
    doc_["config"] = cfg.to_key_values();
  }
  json& operator[](const std::string& key) { return doc_[key]; }
  void input(const std::string& path) {
    doc_["inputs"].push_back({{"path", path}, {"fnv1a", hex64(fnv1a(file_bytes(path)))}});
  }
  void artifact(const std::string& name) {
    doc_["artifacts"].push_back({{"file", name}, {"fnv1a", hex64(fnv1a(file_bytes(out_dir_ / name)))}});
  }
  json summary() const {
    json s;
    for (const char* k : {"tool", "version", "command", "seed", "config_hash"})
      if (doc_.contains(k)) s[k] = doc_.at(k);
    return s;
  }
  void write() const {
    const std::string name = doc_.at("command").get<std::string>() + ".manifest.json";
    auto out = open_out(out_dir_ / name);
    out << doc_.dump(2) << '\n';
  }

 private:
  fs::path out_dir_;
  json doc_;
};

// --- simulate ---------------------------------------------------------------

/// "GP-xalm", "BLR-sv-br", "GP-alm3": dash-separated mean, variance, scheme[degree] tokens.
ModelConfig model_from_label(const std::string& label, ModelConfig base) {
  std::stringstream ss(label);
  std::string tok;
  bool has_mean = false;
  while (std::getline(ss, tok, '-')) {
    if (tok.empty()) throw ConfigError("empty token in model label '" + label + "'");
    try {
      base.mean = parse_mean_model(tok);
      has_mean = true;
      continue;
    } catch (const ConfigError&) {
    }
    try {
      base.variance = parse_variance_model(tok);
      continue;
    } catch (const ConfigError&) {
    }
    std::size_t cut = tok.size();
    while (cut > 0 && std::isdigit(static_cast<unsigned char>(tok[cut - 1]))) --cut;
    try {
      base.scheme = parse_scheme(tok.substr(0, cut));
      if (cut < tok.size()) base.degree = std::stoi(tok.substr(cut));
      continue;
    } catch (const ConfigError&) {
    }
    throw ConfigError("cannot interpret '" + tok + "' in model label '" + label + "'");
  }
  if (!has_mean) throw ConfigError("model label '" + label + "' names no mean model (GP, BLR or BART)");
  base.validate();
  return base;
}

void write_panel(const fs::path& dir, const std::string& stem, const MixedFrequencyPanel& p) {
  {
    auto out = open_out(dir / (stem + "_lf.csv"));
    out << "date," << p.target_name << '\n';
    for (Index t = 0; t < p.y.size(); ++t)
      out << Date{1960 + static_cast<int>(t / 4), static_cast<int>(3 * (t % 4) + 1), 1}.iso() << ','
          << format_double(p.y(t)) << '\n';
  }
  {
    auto out = open_out(dir / (stem + "_hf.csv"));
    out << "date";
    for (const auto& n : p.names) out << ',' << n;
    out << '\n';
    for (Index s = 0; s < p.z.rows(); ++s) {
      out << Date{1960 + static_cast<int>(s / 12), static_cast<int>(s % 12 + 1), 1}.iso();
      for (Index k = 0; k < p.z.cols(); ++k) out << ',' << format_double(p.z(s, k));
      out << '\n';
    }
  }
  open_out(dir / (stem + "_lf.schema")) << "frequency=quarterly\n";
  auto out = open_out(dir / (stem + "_hf.schema"));
  out << "frequency=monthly\n";
  for (std::size_t k = 0; k < p.names.size(); ++k) out << p.names[k] << ".release_lag=" << p.release_lag[k] << '\n';
}

}  // namespace

int simulate(const GlobalOptions& g, const SimulateOptions& o) {
  const ModelConfig base = load_config(g);
  if (o.replications < 1) throw ConfigError("--R must be >= 1");
  std::vector<DgpSpec> specs;
  if (o.dgps.empty()) {
    specs = standard_dgps();
  } else {
    for (const auto& id : o.dgps) specs.push_back(DgpSpec::parse(id));
  }
  for (auto& s : specs) {
    s.t_lf = o.t_lf;
    s.m = base.m;
    s.hf_lags = base.hf_lags;
    s.validate();
  }
  fs::create_directories(g.out_dir);
  Manifest man("simulate", g, base.seed);
  man.config(base);
  json dgp_ids = json::array();
  for (const auto& s : specs) dgp_ids.push_back(s.id());
  man["dgps"] = dgp_ids;
  man["replications"] = o.replications;
  man["t_lf"] = o.t_lf;

  if (o.panels_only) {
    for (const auto& s : specs)
      for (int r = 0; r < o.replications; ++r) {
        Rng rng = panel_stream(base.seed, s, r);
        const auto ds = simulate_dgp(s, rng);
        const std::string stem = s.id() + "_r" + std::to_string(r);
        write_panel(g.out_dir, stem, ds.panel);
        for (const char* suffix : {"_lf.csv", "_hf.csv", "_lf.schema", "_hf.schema"}) man.artifact(stem + suffix);
      }
    man.write();
    return 0;
  }

  std::vector<StudyModel> models;
  for (const auto& label : o.models) models.push_back({label, model_from_label(label, base)});
  json model_meta = json::object();
  for (const auto& mdl : models) model_meta[mdl.label] = hex64(fnv1a(mdl.config.canonical()));
  man["models"] = model_meta;
  man["benchmark"] = o.benchmark;

  StudyOptions so;
  so.replications = o.replications;
  so.seed = base.seed;
  so.threads = g.threads;
  const StudyResult res = run_replication_study(specs, models, so);

  write_loss_grid(g.out_dir / "simulate_crps.csv", res, "crps", o.benchmark);
  write_loss_grid(g.out_dir / "simulate_mae.csv", res, "mae", o.benchmark);
  {
    auto out = open_out(g.out_dir / "simulate_replications.csv");
    out << "dgp,model,rep,crps,mae,failed,error\n";
    for (const auto& r : res.outcomes)
      out << r.dgp << ',' << r.model << ',' << r.rep << ',' << (r.failed ? "" : format_double(r.crps)) << ','
          << (r.failed ? "" : format_double(r.mae)) << ',' << (r.failed ? 1 : 0) << ',' << csv_quote(r.error) << '\n';
  }
  json flagged = json::array();
  for (std::size_t d = 0; d < res.dgps.size(); ++d)
    for (std::size_t m = 0; m < res.models.size(); ++m)
      if (res.cells[d][m].flagged) {
        flagged.push_back({{"dgp", res.dgps[d]}, {"model", res.models[m]}, {"failed", res.cells[d][m].failed}});
        std::cerr << "warning: " << res.dgps[d] << " / " << res.models[m] << ": " << res.cells[d][m].failed
                  << " failed replications\n";
      }
  man["flagged_cells"] = flagged;
  for (const char* f : {"simulate_crps.csv", "simulate_mae.csv", "simulate_replications.csv"}) man.artifact(f);
  man.write();
  return 0;
}

// --- fit --------------------------------------------------------------------

int fit(const GlobalOptions& g, const FitOptions& o) {
  const ModelConfig cfg = load_config(g);
  SeriesSchema lfs;
  lfs.frequency = Frequency::quarterly;
  if (!o.lf_schema.empty()) lfs = SeriesSchema::read(o.lf_schema);
  SeriesSchema hfs;
  if (!o.hf_schema.empty()) hfs = SeriesSchema::read(o.hf_schema);
  const SeriesTable lf = ingest_csv(o.lf_path, lfs);
  const SeriesTable hf = ingest_csv(o.hf_path, hfs);
  std::string target = o.target;
  if (target.empty()) {
    if (lf.names.size() != 1) throw ConfigError("--target is required when the low-frequency file has several series");
    target = lf.names.front();
  }
  const MixedFrequencyPanel panel = make_panel(lf, target, hf, cfg.predictors);
  if (panel.m != cfg.m) {
    throw ConfigError("config m=" + std::to_string(cfg.m) + " but the data imply a frequency ratio of " +
                      std::to_string(panel.m));
  }

  int row = static_cast<int>(panel.lf_periods()) - 1;
  if (!o.target_date.empty()) {
    const Date d = Date::parse(o.target_date);
    row = -1;
    for (std::size_t t = 0; t < panel.dates.size(); ++t)
      if (panel.dates[t] <= d) row = static_cast<int>(t);
    if (row < 0) throw DataError("target date " + o.target_date + " precedes the panel");
  }
  const auto train = training_rows_for_target(panel, cfg.lf_lags, cfg.hf_lags, cfg.horizon, row);
  if (train.size() < 2) throw DataError("too few training periods before the target date");
  const DesignMatrix design =
      assemble_design(panel, cfg.weights(), cfg.lf_lags, cfg.hf_lags, cfg.horizon, train, {row});

  fs::create_directories(g.out_dir);
  Manifest man("fit", g, cfg.seed);
  man.config(cfg);
  man.input(o.lf_path);
  man.input(o.hf_path);
  if (!o.lf_schema.empty()) man.input(o.lf_schema);
  if (!o.hf_schema.empty()) man.input(o.hf_schema);
  const std::string target_date = panel.dates.at(static_cast<std::size_t>(row)).iso();
  man["model"] = cfg.id();
  man["target"] = target;
  man["target_date"] = target_date;
  man["training_periods"] = train.size();
  if (design.underdetermined) std::cerr << "warning: fewer training periods than regressors\n";

  Rng rng = Rng::derive(cfg.seed, hash32(cfg.canonical()));
  const PosteriorDraws draws = run_chain(cfg, design, rng);
  man["retained"] = draws.retained();
  man["failures"] = draws.diagnostics.failures;

  json extra;
  extra["target_date"] = target_date;
  extra["target_row"] = row;
  extra["manifest"] = man.summary();
  save_draws(draws, design, extra.dump()).write(g.out_dir / o.output);
  man.artifact(o.output);
  man.write();
  return 0;
}

// --- predict ----------------------------------------------------------------

namespace {

struct LoadedDraws {
  PosteriorDraws draws;
  DesignMatrix design;
  std::string origin;
};

LoadedDraws load_draws_file(const std::string& path) {
  const ColumnStore store = ColumnStore::read(path);
  auto [draws, design] = load_draws(store);
  const auto meta = json::parse(store.header_json);
  std::string origin = "row";
  if (meta.contains("extra") && meta["extra"].contains("target_date"))
    origin = meta["extra"]["target_date"].get<std::string>();
  return {std::move(draws), std::move(design), origin};
}

}  // namespace

int predict(const GlobalOptions& g, const PredictOptions& o) {
  const LoadedDraws ld = load_draws_file(o.draws_path);
  const auto& cfg = ld.draws.config;
  const std::uint64_t seed = g.seed.value_or(cfg.seed);
  Rng rng = Rng::derive(seed, hash32(cfg.canonical()), 1u);
  const auto preds = draw_predictive(ld.draws, ld.design, rng);
  const std::string label = o.label.empty() ? cfg.id() : o.label;
  const std::string h = cfg.horizon.str();

  fs::create_directories(g.out_dir);
  Manifest man("predict", g, seed);
  man.config(cfg);
  man.input(o.draws_path);
  man["model"] = label;
  man["origin"] = ld.origin;

  auto dout = open_out(g.out_dir / o.draws_csv);
  auto qout = open_out(g.out_dir / o.quantile_csv);
  dout << "model,origin,h,draw,value\n";
  qout << "model,origin,h,tau,value,realization\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const std::string origin = preds.size() == 1 ? ld.origin : ld.origin + "#" + std::to_string(i);
    for (std::size_t d = 0; d < p.draws.size(); ++d)
      dout << label << ',' << origin << ',' << h << ',' << d << ',' << format_double(p.draws[d]) << '\n';
    const double y = ld.design.test.y(static_cast<Index>(i));
    const std::string real = std::isfinite(y) ? format_double(y) : "";
    std::vector<double> sorted = p.draws;
    std::sort(sorted.begin(), sorted.end());
    for (double tau : crps_tau_grid())
      qout << label << ',' << origin << ',' << h << ',' << tau_text(tau) << ','
           << format_double(stats::quantile_sorted(sorted, tau)) << ',' << real << '\n';
  }
  dout.close();
  qout.close();
  man.artifact(o.draws_csv);
  man.artifact(o.quantile_csv);
  man.write();
  return 0;
}

// --- evaluate ---------------------------------------------------------------

namespace {

struct ForecastEntry {
  std::map<int, double> quantiles;  // percent -> value
  double realization = std::numeric_limits<double>::quiet_NaN();
};

using EntryKey = std::tuple<std::string, std::string, std::string>;  // h, origin, model

/// Horizon labels as written by predict: "1", "4/3".
Horizon horizon_from_label(const std::string& h) {
  const auto slash = h.find('/');
  return Horizon::parse(h, slash == std::string::npos ? 1 : std::stoi(h.substr(slash + 1)));
}

const std::vector<std::string> kMainMetrics = {"MAE", "CRPS", "CRPS-L", "CRPS-R"};
const std::vector<std::string> kSubsamples = {"Full", "PreCovid", "PostCovid", "Recession", "Expansion"};

/// Model ids of the form MEAN-VAR-SCHEME-SIZE split into dummy categories.
std::optional<std::vector<std::string>> id_levels(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  std::string tok;
  while (std::getline(ss, tok, '-')) parts.push_back(tok);
  if (parts.size() != 4) return std::nullopt;
  return parts;
}

}  // namespace

int evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
  if (o.predictions.empty()) throw ConfigError("evaluate needs at least one --predictions file");
  const std::uint64_t seed = g.seed.value_or(1);
  Manifest man("evaluate", g, seed);

  std::map<EntryKey, ForecastEntry> entries;
  for (const auto& path : o.predictions) {
    const CsvTable t = read_csv(path);
    const std::size_t cm = t.require("model"), co = t.require("origin"), ch = t.require("h"), ct = t.require("tau"),
                      cv = t.require("value"), cr = t.require("realization");
    man.input(path);
    for (const auto& row : t.rows) {
      const auto tau = parse_cell(row.at(ct));
      const auto value = parse_cell(row.at(cv));
      const auto real = parse_cell(row.at(cr));
      if (!tau || !value || !real || !std::isfinite(*tau) || !std::isfinite(*value))
        throw DataError(path + ": unparseable prediction row for model " + row.at(cm));
      const double pct = *tau * 100.0;
      if (std::abs(pct - std::round(pct)) > 1e-6) throw DataError(path + ": tau " + row.at(ct) + " is off the grid");
      auto& e = entries[{row.at(ch), row.at(co), row.at(cm)}];
      e.quantiles[static_cast<int>(std::lround(pct))] = *value;
      if (std::isfinite(*real)) {
        if (std::isfinite(e.realization) && e.realization != *real)
          throw DataError(path + ": conflicting realizations for " + row.at(cm) + " at " + row.at(co));
        e.realization = *real;
      }
    }
  }

  // per-entry losses
  struct Scored {
    std::map<std::string, double> loss;
  };
  std::map<EntryKey, Scored> scored;
  int unrealized = 0;
  for (const auto& [key, e] : entries) {
    if (!std::isfinite(e.realization)) {
      ++unrealized;
      continue;
    }
    std::vector<double> q;
    for (int pct = 5; pct <= 95; ++pct) {
      const auto it = e.quantiles.find(pct);
      if (it == e.quantiles.end())
        throw DataError("incomplete quantile grid for " + std::get<2>(key) + " at " + std::get<1>(key));
      q.push_back(it->second);
    }
    Scored s;
    const double y = e.realization;
    s.loss["MAE"] = std::abs(y - e.quantiles.at(50));
    s.loss["CRPS"] = weighted_crps_from_quantiles(q, y, CrpsWeighting::equal);
    s.loss["CRPS-L"] = weighted_crps_from_quantiles(q, y, CrpsWeighting::left);
    s.loss["CRPS-R"] = weighted_crps_from_quantiles(q, y, CrpsWeighting::right);
    for (const auto& [pct, v] : e.quantiles) s.loss["QS" + tau_text(pct / 100.0)] = quantile_score(y, v, pct / 100.0);
    scored[key] = std::move(s);
  }
  if (unrealized > 0) std::cerr << "warning: " << unrealized << " forecasts without a realization were skipped\n";
  if (scored.empty()) throw DataError("no forecast has a realization to score");

  // subsamples per origin
  std::set<std::string> origin_set;
  for (const auto& [key, s] : scored) origin_set.insert(std::get<1>(key));
  const std::vector<std::string> origins(origin_set.begin(), origin_set.end());
  std::vector<Date> dates;
  bool dated = true;
  for (const auto& org : origins) {
    try {
      dates.push_back(Date::parse(org));
    } catch (const DataError&) {
      dated = false;
      break;
    }
  }
  std::map<std::string, std::set<std::string>> tags;  // origin -> subsamples
  std::vector<std::string> warnings;
  if (dated) {
    RecessionCalendar cal;
    if (!o.recessions.empty()) {
      cal = RecessionCalendar::read(o.recessions);
      man.input(o.recessions);
    }
    const auto masks = subsample_masks(dates, cal);
    warnings = masks.warnings;
    for (std::size_t i = 0; i < origins.size(); ++i) {
      auto& t = tags[origins[i]];
      t.insert("Full");
      t.insert(masks.pre_covid[i] ? "PreCovid" : "PostCovid");
      if (!o.recessions.empty()) t.insert(masks.recession[i] ? "Recession" : "Expansion");
    }
  } else {
    warnings.push_back("origins are not dates; only the Full subsample is reported");
    for (const auto& org : origins) tags[org].insert("Full");
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  man["warnings"] = warnings;

  fs::create_directories(g.out_dir);
  std::vector<LossRecord> records;
  for (const auto& [key, s] : scored) {
    std::string tagtext;
    for (const auto& sub : kSubsamples)
      if (tags[std::get<1>(key)].count(sub)) tagtext += (tagtext.empty() ? "" : ";") + sub;
    for (const auto& [metric, v] : s.loss)
      records.push_back({std::get<2>(key), std::get<1>(key), std::get<0>(key), tagtext, metric, v});
  }
  write_loss_table(g.out_dir / "loss_table.csv", records);
  man.artifact("loss_table.csv");

  std::set<std::string> horizons, model_set;
  for (const auto& [key, s] : scored) {
    horizons.insert(std::get<0>(key));
    model_set.insert(std::get<2>(key));
  }
  const std::vector<std::string> models(model_set.begin(), model_set.end());
  const std::string bench = o.benchmark.empty() ? models.front() : o.benchmark;
  if (!model_set.count(bench)) throw ConfigError("benchmark model '" + bench + "' has no scored forecasts");
  man["benchmark"] = bench;

  auto summary = open_out(g.out_dir / "loss_summary.csv");
  auto dm = open_out(g.out_dir / "dm_tests.csv");
  auto mcs = open_out(g.out_dir / "mcs.csv");
  summary << "model,h,subsample,metric,n,mean\n";
  dm << "model,benchmark,h,subsample,metric,n,relative,statistic,p_value,stars\n";
  mcs << "h,subsample,metric,model,included,p_value,elimination_rank\n";
  for (const auto& h : horizons) {
    for (const auto& sub : kSubsamples) {
      // origins with a score for every model in this subsample
      std::vector<std::string> common;
      for (const auto& org : origins) {
        if (!tags[org].count(sub)) continue;
        const bool all = std::all_of(models.begin(), models.end(),
                                     [&](const std::string& mdl) { return scored.count({h, org, mdl}) > 0; });
        if (all) common.push_back(org);
      }
      for (const auto& metric : kMainMetrics) {
        for (const auto& mdl : models) {
          double sum = 0;
          int n = 0;
          for (const auto& org : origins)
            if (tags[org].count(sub))
              if (auto it = scored.find({h, org, mdl}); it != scored.end()) {
                sum += it->second.loss.at(metric);
                ++n;
              }
          if (n > 0) summary << mdl << ',' << h << ',' << sub << ',' << metric << ',' << n << ',' << format_double(sum / n) << '\n';
        }
        const Index n = static_cast<Index>(common.size());
        MatrixXd losses(n, static_cast<Index>(models.size()));
        for (Index i = 0; i < n; ++i)
          for (std::size_t j = 0; j < models.size(); ++j)
            losses(i, static_cast<Index>(j)) = scored.at({h, common[i], models[j]}).loss.at(metric);
        const auto bj = static_cast<Index>(std::find(models.begin(), models.end(), bench) - models.begin());
        if (n >= 10) {
          const int lag = dm_hac_lag(horizon_from_label(h));
          for (std::size_t j = 0; j < models.size(); ++j) {
            if (static_cast<Index>(j) == bj) continue;
            const VectorXd a = losses.col(static_cast<Index>(j));
            const VectorXd b = losses.col(bj);
            const auto r = dm_test({a.data(), static_cast<std::size_t>(n)}, {b.data(), static_cast<std::size_t>(n)},
                                   lag, o.harvey);
            dm << models[j] << ',' << bench << ',' << h << ',' << sub << ',' << metric << ',' << n << ','
               << format_double(a.mean() / b.mean()) << ',' << (r.defined ? format_double(r.statistic) : "") << ','
               << format_double(r.p_value) << ',' << std::string(static_cast<std::size_t>(r.stars), '*') << '\n';
          }
        }
        if (n >= 20 && models.size() >= 2) {
          McsConfig mc;
          mc.alpha = o.mcs_alpha;
          mc.block = o.mcs_block;
          mc.replicates = o.mcs_replicates;
          mc.seed = seed;
          const auto r = model_confidence_set(losses, mc);
          std::vector<int> rank(models.size(), 0);
          for (std::size_t k = 0; k < r.elimination_order.size(); ++k)
            rank[static_cast<std::size_t>(r.elimination_order[k])] = static_cast<int>(k) + 1;
          for (std::size_t j = 0; j < models.size(); ++j)
            mcs << h << ',' << sub << ',' << metric << ',' << models[j] << ',' << (r.included[j] ? 1 : 0) << ','
                << format_double(r.p_values[j]) << ',' << (rank[j] ? std::to_string(rank[j]) : "") << '\n';
        }
      }
    }
  }
  summary.close();
  dm.close();
  mcs.close();
  for (const char* f : {"loss_summary.csv", "dm_tests.csv", "mcs.csv"}) man.artifact(f);

  // exploratory regression of log CRPS on model-category dummies
  const std::vector<std::string> categories = {"mean", "variance", "midas", "size"};
  const std::vector<std::string> preferred = {"BLR", "hom", "br", "s"};
  bool parsable = true;
  for (const auto& mdl : models) parsable = parsable && id_levels(mdl).has_value();
  if (parsable) {
    VectorXd y(static_cast<Index>(scored.size()));
    std::vector<std::vector<std::string>> levels;
    Index i = 0;
    for (const auto& [key, s] : scored) {
      const double c = s.loss.at("CRPS");
      if (!(c > 0)) continue;
      y(i++) = std::log(c);
      levels.push_back(*id_levels(std::get<2>(key)));
    }
    y.conservativeResize(i);
    std::vector<std::string> used_cats, baselines;
    std::vector<std::vector<std::string>> used_levels(levels.size());
    for (std::size_t c = 0; c < categories.size(); ++c) {
      std::set<std::string> present;
      for (const auto& l : levels) present.insert(l[c]);
      if (present.size() < 2) continue;
      used_cats.push_back(categories[c]);
      baselines.push_back(present.count(preferred[c]) ? preferred[c] : *present.begin());
      for (std::size_t r = 0; r < levels.size(); ++r) used_levels[r].push_back(levels[r][c]);
    }
    if (!used_cats.empty()) {
      try {
        const auto r = dummy_regression(y, used_levels, used_cats, baselines);
        auto out = open_out(g.out_dir / "dummy_regression.csv");
        out << "term,coef_x100,se_x100,stars\n";
        for (std::size_t k = 0; k < r.names.size(); ++k)
          out << r.names[k] << ',' << format_double(r.coef(static_cast<Index>(k))) << ','
              << format_double(r.se(static_cast<Index>(k))) << ',' << std::string(static_cast<std::size_t>(r.stars[k]), '*')
              << '\n';
        out.close();
        man.artifact("dummy_regression.csv");
        json b = json::object();
        for (std::size_t c = 0; c < used_cats.size(); ++c) b[used_cats[c]] = baselines[c];
        man["dummy_baselines"] = b;
      } catch (const DataError& e) {
        std::cerr << "warning: dummy regression skipped: " << e.what() << '\n';
      }
    }
  }
  man.write();
  return 0;
}

// --- importance -------------------------------------------------------------

int importance(const GlobalOptions& g, const ImportanceOptions& o) {
  if (o.draws.empty()) throw ConfigError("importance needs --draws files, one per holdout origin");
  Manifest man("importance", g, g.seed.value_or(1));

  struct Group {
    std::vector<std::string> origins;
    std::vector<double> medians;
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<int> column_group;
    std::vector<std::string> column_names, group_names;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;  // (model, h)
  for (const auto& path : o.draws) {
    const LoadedDraws ld = load_draws_file(path);
    man.input(path);
    const auto& cfg = ld.draws.config;
    Rng rng = Rng::derive(g.seed.value_or(cfg.seed), hash32(cfg.canonical()), 1u);
    const auto preds = draw_predictive(ld.draws, ld.design, rng);
    auto& grp = groups[{cfg.id(), cfg.horizon.str()}];
    const auto& test = ld.design.test;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      // raw lags: target lags, then every high-frequency lag of each predictor
      std::vector<double> v;
      std::vector<int> cg;
      std::vector<std::string> cn;
      for (Index j = 0; j < test.ylags.cols(); ++j) {
        v.push_back(test.ylags(static_cast<Index>(i), j));
        cg.push_back(0);
        cn.push_back(ld.design.group_names.at(0) + ".lag" + std::to_string(j + 1));
      }
      for (std::size_t k = 0; k < test.hf.size(); ++k)
        for (Index p = 0; p < test.hf[k].cols(); ++p) {
          v.push_back(test.hf[k](static_cast<Index>(i), p));
          cg.push_back(static_cast<int>(k) + 1);
          cn.push_back(ld.design.group_names.at(k + 1) + ".hf" + std::to_string(p));
        }
      if (grp.rows.empty()) {
        grp.column_group = cg;
        grp.column_names = cn;
        grp.group_names = ld.design.group_names;
      } else if (cn != grp.column_names) {
        throw DataError(path + ": regressors differ from the other draws of " + cfg.id());
      }
      grp.rows.push_back(Eigen::Map<Eigen::RowVectorXd>(v.data(), static_cast<Index>(v.size())));
      grp.medians.push_back(preds[i].quantile(0.5));
      grp.origins.push_back(ld.origin);
    }
  }

  fs::create_directories(g.out_dir);
  auto out = open_out(g.out_dir / "importance.csv");
  auto cols = open_out(g.out_dir / "importance_columns.csv");
  out << "variable,h,model,coefficient\n";
  cols << "column,h,model,coefficient\n";
  json flags = json::array();
  for (const auto& [key, grp] : groups) {
    const Index n = static_cast<Index>(grp.rows.size());
    if (n < 20) {
      throw DataError("importance for " + key.first + " needs at least 20 holdout origins, got " + std::to_string(n));
    }
    MatrixXd x(n, grp.rows.front().size());
    for (Index i = 0; i < n; ++i) x.row(i) = grp.rows[static_cast<std::size_t>(i)];
    VectorXd y = Eigen::Map<const VectorXd>(grp.medians.data(), n);
    const Standardizer st = Standardizer::fit(x, y);
    const MatrixXd xs = st.apply(x);
    const VectorXd ys = st.apply_y(y);
    const auto r = lasso_importance(ys, xs, grp.column_group, static_cast<int>(grp.group_names.size()), o.folds);
    if (r.all_zero) flags.push_back({{"model", key.first}, {"h", key.second}});
    for (std::size_t k = 0; k < grp.group_names.size(); ++k)
      out << grp.group_names[k] << ',' << key.second << ',' << key.first << ','
          << format_double(r.group_sum(static_cast<Index>(k))) << '\n';
    for (std::size_t j = 0; j < grp.column_names.size(); ++j)
      cols << grp.column_names[j] << ',' << key.second << ',' << key.first << ','
           << format_double(r.coef(static_cast<Index>(j))) << '\n';
  }
  out.close();
  cols.close();
  man["all_zero"] = flags;
  man.artifact("importance.csv");
  man.artifact("importance_columns.csv");
  man.write();
  return 0;
}

}  // namespace midas::cli
