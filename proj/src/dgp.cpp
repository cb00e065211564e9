#include "midas/dgp.hpp"

#include "midas/evaluation.hpp"
#include "midas/io.hpp"
#include "midas/sampler.hpp"
#include "midas/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

namespace midas {

std::string DgpSpec::id() const {
  static const char* w[] = {"fast", "hump", "eq"};
  return std::string(form == DgpForm::nl ? "NL" : "L") + "-" + w[static_cast<int>(weights)] + "-K" + std::to_string(k);
}

DgpSpec DgpSpec::parse(std::string_view id) {
  const std::string s(id);
  const auto d1 = s.find('-');
  const auto d2 = s.find('-', d1 == std::string::npos ? 0 : d1 + 1);
  if (d1 == std::string::npos || d2 == std::string::npos || s.size() < d2 + 3 || s[d2 + 1] != 'K')
    throw ConfigError("malformed DGP id '" + s + "' (expected e.g. NL-fast-K10)");
  DgpSpec spec;
  const std::string form = s.substr(0, d1);
  const std::string weights = s.substr(d1 + 1, d2 - d1 - 1);
  if (form == "NL")
    spec.form = DgpForm::nl;
  else if (form == "L")
    spec.form = DgpForm::l;
  else
    throw ConfigError("unknown DGP form '" + form + "'");
  if (weights == "fast")
    spec.weights = DgpWeights::fast;
  else if (weights == "hump")
    spec.weights = DgpWeights::hump;
  else if (weights == "eq")
    spec.weights = DgpWeights::eq;
  else
    throw ConfigError("unknown DGP weight scheme '" + weights + "'");
  try {
    std::size_t used = 0;
    spec.k = std::stoi(s.substr(d2 + 2), &used);
    if (used != s.size() - d2 - 2) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("malformed predictor count in DGP id '" + s + "'");
  }
  spec.validate();
  return spec;
}

XalmTheta DgpSpec::theta() const {
  switch (weights) {
    case DgpWeights::fast: return {0.0, -0.1};
    case DgpWeights::hump: return {0.5, -0.05};
    case DgpWeights::eq: return {0.0, 0.0};
  }
  return {};
}

void DgpSpec::validate() const {
  if (k < 5) throw ConfigError("DGP needs at least five predictors");
  if (t_lf < 10) throw ConfigError("DGP needs at least ten in-sample periods");
  if (m < 1 || hf_lags < 1) throw ConfigError("DGP frequency ratio and lag count must be positive");
  if (std::abs(rho_z) >= 1 || std::abs(rho_y) >= 1) throw ConfigError("DGP autoregressions must be stationary");
  if (!(sigma2 >= 0)) throw ConfigError("DGP error variance must be nonnegative");
  if (presample < 0) throw ConfigError("DGP presample must be nonnegative");
  if (hf_burn < hf_lags) throw ConfigError("DGP burn-in must cover the high-frequency lag window");
}

std::vector<DgpSpec> standard_dgps() {
  std::vector<DgpSpec> out;
  for (auto form : {DgpForm::nl, DgpForm::l})
    for (auto w : {DgpWeights::fast, DgpWeights::hump, DgpWeights::eq})
      for (int k : {10, 25}) {
        DgpSpec s;
        s.form = form;
        s.weights = w;
        s.k = k;
        out.push_back(s);
      }
  return out;
}

double dgp_mean(DgpForm form, const VectorXd& c, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (form == DgpForm::nl) {
    if (c.size() != 3) throw std::invalid_argument("NL mean takes three coefficients");
    return c(0) * std::sin(std::numbers::pi * x(0) * x(1)) + 2.0 * c(0) * (x(2) - 0.5) * (x(2) - 0.5) + c(1) * x(3) +
           c(2) * x(4);
  }
  if (c.size() != 5) throw std::invalid_argument("L mean takes five coefficients");
  return x.head(5).dot(c.transpose());
}

Rng panel_stream(std::uint64_t seed, const DgpSpec& spec, int rep) {
  return Rng::derive(seed, static_cast<std::uint32_t>(fnv1a(spec.id())), rep);
}

SimulatedDataset simulate_dgp(const DgpSpec& spec, Rng& rng, std::optional<VectorXd> coef) {
  spec.validate();
  const int m = spec.m;
  const int burn_q = (spec.hf_burn + m - 1) / m;
  const int panel_q = spec.presample + spec.t_lf + 1;
  const int total_q = burn_q + panel_q;
  const Index total_h = static_cast<Index>(m) * total_q;

  SimulatedDataset ds;
  auto& truth = ds.truth;
  if (coef) {
    truth.coef = *coef;
  } else if (spec.form == DgpForm::nl) {
    truth.coef.resize(3);
    truth.coef << rng.uniform(), rng.uniform(-2, 2), rng.uniform(-2, 2);
  } else {
    truth.coef.resize(5);
    for (Index j = 0; j < 5; ++j) truth.coef(j) = rng.normal(0.0, 0.5);
  }
  truth.weights = build_weight_matrix<double>(Scheme::xalm, spec.hf_lags, 0, m, spec.theta()).values.col(0);

  MatrixXd z(total_h, spec.k);
  const double sd0 = 1.0 / std::sqrt(1.0 - spec.rho_z * spec.rho_z);
  for (Index k = 0; k < spec.k; ++k) {
    z(0, k) = sd0 * rng.normal();
    for (Index i = 1; i < total_h; ++i) z(i, k) = spec.rho_z * z(i - 1, k) + rng.normal();
  }

  // x~_q,k = sum_p w_p z_{m q + m - 1 - p, k}; available once the lag window fits
  MatrixXd xt = MatrixXd::Constant(total_q, spec.k, std::numeric_limits<double>::quiet_NaN());
  VectorXd f = VectorXd::Constant(total_q, std::numeric_limits<double>::quiet_NaN());
  VectorXd y = VectorXd::Constant(total_q, std::numeric_limits<double>::quiet_NaN());
  const double sigma = std::sqrt(spec.sigma2);
  double y_prev = 0;
  for (int q = 0; q < total_q; ++q) {
    const Index top = static_cast<Index>(m) * q + m - 1;
    if (top - (spec.hf_lags - 1) < 0) continue;
    for (Index k = 0; k < spec.k; ++k) {
      double s = 0;
      for (int p = 0; p < spec.hf_lags; ++p) s += truth.weights(p) * z(top - p, k);
      xt(q, k) = s;
    }
    f(q) = dgp_mean(spec.form, truth.coef, xt.row(q));
    y(q) = spec.rho_y * y_prev + f(q) + sigma * rng.normal();
    y_prev = y(q);
  }

  auto& panel = ds.panel;
  panel.m = m;
  panel.y = y.tail(panel_q);
  panel.z = z.bottomRows(static_cast<Index>(m) * panel_q);
  for (int k = 0; k < spec.k; ++k) panel.names.push_back("z" + std::to_string(k + 1));
  panel.release_lag.assign(spec.k, 0);
  panel.target_name = "y";
  truth.x_tilde = xt.bottomRows(panel_q);
  truth.f = f.tail(panel_q);
  ds.first_row = spec.presample;
  ds.oos_row = panel_q - 1;
  truth.y_oos = panel.y(ds.oos_row);
  return ds;
}

StudyResult run_replication_study(const std::vector<DgpSpec>& specs, const std::vector<StudyModel>& models,
                                  const StudyOptions& opt) {
  if (opt.replications < 1) throw ConfigError("replications must be >= 1");
  if (specs.empty() || models.empty()) throw ConfigError("study needs at least one DGP and one model");
  for (const auto& s : specs) s.validate();
  for (const auto& mdl : models) mdl.config.validate();

  const std::size_t n_items = specs.size() * models.size() * static_cast<std::size_t>(opt.replications);
  std::vector<ReplicationOutcome> outcomes(n_items);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t item = next++; item < n_items; item = next++) {
      const std::size_t mi = item % models.size();
      const int rep = static_cast<int>((item / models.size()) % opt.replications);
      const std::size_t di = item / (models.size() * opt.replications);
      const DgpSpec& spec = specs[di];
      const ModelConfig& cfg = models[mi].config;
      ReplicationOutcome& o = outcomes[item];
      o.dgp = spec.id();
      o.model = models[mi].label;
      o.rep = rep;
      try {
        const auto dgp_hash = static_cast<std::uint32_t>(fnv1a(spec.id()));
        Rng panel_rng = panel_stream(opt.seed, spec, rep);
        const auto ds = simulate_dgp(spec, panel_rng);
        std::vector<int> train;
        for (int t = first_feasible_row(ds.panel, cfg.lf_lags, cfg.hf_lags, cfg.horizon);
             t <= ds.oos_row - 1 - cfg.horizon.lf_shift(); ++t)
          train.push_back(t);
        const auto design =
            assemble_design(ds.panel, cfg.weights(), cfg.lf_lags, cfg.hf_lags, cfg.horizon, train, {ds.oos_row});
        Rng chain_rng = Rng::derive(opt.seed, dgp_hash, rep, static_cast<std::uint32_t>(fnv1a(cfg.canonical())));
        const auto draws = run_chain(cfg, design, chain_rng);
        const auto pred = draw_predictive(draws, design, chain_rng).at(0);
        o.crps = weighted_crps(pred.draws, ds.truth.y_oos);
        o.mae = std::abs(pred.quantile(0.5) - ds.truth.y_oos);
      } catch (const std::exception& e) {
        o.failed = true;
        o.error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(opt.threads, static_cast<int>(n_items)));
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  StudyResult res;
  for (const auto& s : specs) res.dgps.push_back(s.id());
  for (const auto& mdl : models) res.models.push_back(mdl.label);
  res.cells.assign(specs.size(), std::vector<StudyCell>(models.size()));
  for (std::size_t item = 0; item < n_items; ++item) {
    const std::size_t mi = item % models.size();
    const std::size_t di = item / (models.size() * opt.replications);
    auto& cell = res.cells[di][mi];
    const auto& o = outcomes[item];
    if (o.failed) {
      ++cell.failed;
      continue;
    }
    ++cell.succeeded;
    cell.mean_crps += o.crps;
    cell.mean_mae += o.mae;
  }
  for (auto& row : res.cells)
    for (auto& cell : row) {
      if (cell.succeeded > 0) {
        cell.mean_crps /= cell.succeeded;
        cell.mean_mae /= cell.succeeded;
      } else {
        cell.mean_crps = cell.mean_mae = std::numeric_limits<double>::quiet_NaN();
      }
      cell.flagged = cell.failed > 0.05 * opt.replications;
    }
  res.outcomes = std::move(outcomes);
  return res;
}

void write_loss_grid(const std::filesystem::path& path, const StudyResult& r, const std::string& metric,
                     const std::string& benchmark) {
  if (metric != "crps" && metric != "mae") throw ConfigError("loss grid metric must be crps or mae");
  std::ptrdiff_t bench = -1;
  if (!benchmark.empty()) {
    const auto it = std::find(r.models.begin(), r.models.end(), benchmark);
    if (it == r.models.end()) throw ConfigError("benchmark model '" + benchmark + "' is not part of the study");
    bench = it - r.models.begin();
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "dgp";
  for (const auto& mdl : r.models) out << ',' << mdl;
  out << '\n';
  for (std::size_t d = 0; d < r.dgps.size(); ++d) {
    out << r.dgps[d];
    auto value = [&](std::size_t mi) {
      return metric == "crps" ? r.cells[d][mi].mean_crps : r.cells[d][mi].mean_mae;
    };
    for (std::size_t mi = 0; mi < r.models.size(); ++mi) {
      const double v = bench >= 0 ? value(mi) / value(static_cast<std::size_t>(bench)) : value(mi);
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

}  // namespace midas
