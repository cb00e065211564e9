#include "midas/evaluation.hpp"

#include "midas/io.hpp"
#include "midas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace midas {

CrpsWeighting parse_crps_weighting(std::string_view s) {
  if (s == "equal" || s == "CRPS") return CrpsWeighting::equal;
  if (s == "L" || s == "left") return CrpsWeighting::left;
  if (s == "R" || s == "right") return CrpsWeighting::right;
  throw ConfigError("unknown CRPS weighting '" + std::string(s) + "'");
}

std::string_view crps_weighting_name(CrpsWeighting w) {
  switch (w) {
    case CrpsWeighting::equal: return "CRPS";
    case CrpsWeighting::left: return "CRPS-L";
    case CrpsWeighting::right: return "CRPS-R";
  }
  return "?";
}

double quantile_score(double y, double yhat, double tau) {
  return 2.0 * (y - yhat) * (tau - (y <= yhat ? 1.0 : 0.0));
}

const std::vector<double>& crps_tau_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int i = 5; i <= 95; ++i) g.push_back(i / 100.0);
    return g;
  }();
  return grid;
}

double crps_weight(double tau, CrpsWeighting w) {
  switch (w) {
    case CrpsWeighting::equal: return 1.0;
    case CrpsWeighting::left: return (1.0 - tau) * (1.0 - tau);
    case CrpsWeighting::right: return tau * tau;
  }
  return 1.0;
}

double weighted_crps_from_quantiles(std::span<const double> quantiles, double y, CrpsWeighting w) {
  const auto& grid = crps_tau_grid();
  if (quantiles.size() != grid.size()) throw DataError("weighted CRPS needs one quantile per grid level");
  double s = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += crps_weight(grid[i], w) * quantile_score(y, quantiles[i], grid[i]);
  return s / static_cast<double>(grid.size());
}

double weighted_crps(std::span<const double> draws, double y, CrpsWeighting w) {
  if (draws.size() < 2) throw DataError("weighted CRPS needs at least two predictive draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> q;
  q.reserve(crps_tau_grid().size());
  for (double tau : crps_tau_grid()) q.push_back(stats::quantile_sorted(sorted, tau));
  return weighted_crps_from_quantiles(q, y, w);
}

int significance_stars(double p) {
  if (!(p >= 0)) return 0;
  if (p < 0.001) return 3;
  if (p < 0.01) return 2;
  if (p < 0.05) return 1;
  return 0;
}

DmResult dm_test(std::span<const double> a, std::span<const double> b, int hac_lag, bool harvey) {
  if (a.size() != b.size()) throw DataError("DM test: loss series differ in length");
  if (a.size() < 10) throw DataError("DM test: at least 10 paired losses are required");
  if (hac_lag < 0) throw ConfigError("DM test: HAC lag must be >= 0");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double dbar = stats::mean(d);
  auto autocov = [&](std::size_t k) {
    double s = 0;
    for (std::size_t i = k; i < n; ++i) s += (d[i] - dbar) * (d[i - k] - dbar);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  DmResult r;
  if (!(g0 > 0)) return r;
  double lrv = g0;
  for (int k = 1; k <= hac_lag && static_cast<std::size_t>(k) < n; ++k)
    lrv += 2.0 * (1.0 - k / (hac_lag + 1.0)) * autocov(k);
  if (!(lrv > 0)) lrv = g0;
  r.defined = true;
  r.statistic = dbar / std::sqrt(lrv / static_cast<double>(n));
  if (harvey) {
    const double h = hac_lag + 1.0;
    const double nn = static_cast<double>(n);
    r.statistic *= std::sqrt((nn + 1.0 - 2.0 * h + h * (h - 1.0) / nn) / nn);
    r.p_value = 2.0 * (1.0 - stats::student_t_cdf(std::abs(r.statistic), nn - 1.0));
  } else {
    r.p_value = 2.0 * (1.0 - stats::normal_cdf(std::abs(r.statistic)));
  }
  r.stars = significance_stars(r.p_value);
  return r;
}

McsResult model_confidence_set(const MatrixXd& losses, const McsConfig& cfg) {
  const Index t = losses.rows();
  const Index j = losses.cols();
  if (j < 2) throw DataError("MCS: at least two models are required");
  if (t < 20) throw DataError("MCS: at least 20 loss periods are required");
  if (cfg.block < 1 || cfg.block > t) throw ConfigError("MCS: block length must lie in [1, T]");
  if (cfg.replicates < 1) throw ConfigError("MCS: replicates must be >= 1");
  if (!losses.allFinite()) throw DataError("MCS: non-finite losses");

  // Bootstrap means of each model's losses, sharing block draws across models.
  Rng rng(cfg.seed);
  const VectorXd mean = losses.colwise().mean().transpose();
  MatrixXd boot(cfg.replicates, j);
  const Index nblocks = (t + cfg.block - 1) / cfg.block;
  VectorXd acc(j);
  for (int b = 0; b < cfg.replicates; ++b) {
    acc.setZero();
    Index filled = 0;
    for (Index k = 0; k < nblocks; ++k) {
      const Index start = rng.index(t - cfg.block + 1);
      for (Index i = 0; i < cfg.block && filled < t; ++i, ++filled) acc += losses.row(start + i).transpose();
    }
    boot.row(b) = (acc / static_cast<double>(t)).transpose();
  }

  // Pairwise standardized differentials.
  MatrixXd tstat(j, j);
  MatrixXd sd(j, j);
  for (Index a = 0; a < j; ++a)
    for (Index c = 0; c < j; ++c) {
      const double dbar = mean(a) - mean(c);
      const VectorXd dev = (boot.col(a) - boot.col(c)).array() - dbar;
      const double v = dev.squaredNorm() / cfg.replicates;
      sd(a, c) = std::sqrt(v);
      if (v > 0)
        tstat(a, c) = dbar / sd(a, c);
      else
        tstat(a, c) = dbar == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dbar);
    }

  McsResult res;
  res.included.assign(j, true);
  res.p_values.assign(j, 1.0);
  double running_p = 0;
  std::vector<Index> alive(j);
  for (Index a = 0; a < j; ++a) alive[a] = a;
  while (alive.size() > 1) {
    double tr = 0;
    for (Index a : alive)
      for (Index c : alive) tr = std::max(tr, std::abs(tstat(a, c)));
    int exceed = 0;
    for (int b = 0; b < cfg.replicates; ++b) {
      double tb = 0;
      for (Index a : alive)
        for (Index c : alive) {
          if (a == c || sd(a, c) == 0) continue;
          const double num = boot(b, a) - boot(b, c) - (mean(a) - mean(c));
          tb = std::max(tb, std::abs(num) / sd(a, c));
        }
      exceed += tb >= tr;
    }
    const double p = static_cast<double>(exceed) / cfg.replicates;
    if (p >= cfg.alpha) break;
    // eliminate the model with the largest worst-case standardized loss excess
    Index worst = alive.front();
    double worst_v = -std::numeric_limits<double>::infinity();
    for (Index a : alive) {
      double v = -std::numeric_limits<double>::infinity();
      for (Index c : alive)
        if (c != a) v = std::max(v, tstat(a, c));
      if (v > worst_v) {
        worst_v = v;
        worst = a;
      }
    }
    running_p = std::max(running_p, p);
    res.p_values[worst] = running_p;
    res.included[worst] = false;
    res.elimination_order.push_back(static_cast<int>(worst));
    alive.erase(std::find(alive.begin(), alive.end(), worst));
  }
  return res;
}

RecessionCalendar RecessionCalendar::read(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto ci = table.require("start");
  const auto ce = table.require("end");
  RecessionCalendar cal;
  for (const auto& row : table.rows) {
    const Date s = Date::parse(row.at(ci));
    const Date e = Date::parse(row.at(ce));
    if (e < s) throw DataError("recession calendar: interval ends before it starts (" + row.at(ci) + ")");
    cal.intervals.emplace_back(s, e);
  }
  std::sort(cal.intervals.begin(), cal.intervals.end());
  return cal;
}

bool RecessionCalendar::covers(const Date& d) const {
  if (intervals.empty()) return false;
  Date last = intervals.front().second;
  for (const auto& iv : intervals) last = std::max(last, iv.second);
  return !(d < intervals.front().first) && !(last < d);
}

bool RecessionCalendar::in_recession(const Date& d) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const auto& iv) { return !(d < iv.first) && !(iv.second < d); });
}

SubsampleMasks subsample_masks(const std::vector<Date>& dates, const RecessionCalendar& calendar) {
  const Date covid{2020, 1, 1};
  SubsampleMasks m;
  int outside = 0;
  for (const auto& d : dates) {
    m.full.push_back(true);
    m.pre_covid.push_back(d < covid);
    m.post_covid.push_back(!(d < covid));
    const bool rec = calendar.in_recession(d);
    if (!calendar.covers(d)) ++outside;
    m.recession.push_back(rec);
    m.expansion.push_back(!rec);
  }
  if (outside > 0)
    m.warnings.push_back(std::to_string(outside) +
                         " date(s) outside the recession calendar coverage were classified as Expansion");
  return m;
}

DummyRegressionResult dummy_regression(const VectorXd& y, const std::vector<std::vector<std::string>>& levels,
                                       const std::vector<std::string>& categories,
                                       const std::vector<std::string>& baselines) {
  const Index n = y.size();
  if (static_cast<Index>(levels.size()) != n) throw DataError("dummy regression: row count mismatch");
  if (categories.size() != baselines.size()) throw DataError("dummy regression: one baseline per category");

  DummyRegressionResult res;
  std::vector<std::pair<std::size_t, std::string>> dummies;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    std::vector<std::string> seen;
    for (const auto& row : levels) {
      if (row.size() != categories.size()) throw DataError("dummy regression: ragged feature rows");
      if (row[c] != baselines[c] && std::find(seen.begin(), seen.end(), row[c]) == seen.end()) seen.push_back(row[c]);
    }
    std::sort(seen.begin(), seen.end());
    for (const auto& lv : seen) {
      dummies.emplace_back(c, lv);
      res.names.push_back(categories[c] + "=" + lv);
    }
  }
  const Index k = static_cast<Index>(dummies.size()) + 1;
  if (n <= k) throw DataError("dummy regression: more parameters than observations");
  MatrixXd x = MatrixXd::Zero(n, k);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i)
    for (std::size_t q = 0; q < dummies.size(); ++q)
      if (levels[i][dummies[q].first] == dummies[q].second) x(i, q + 1) = 1.0;

  const Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < k) throw DataError("dummy regression: dummy design is rank deficient");
  const VectorXd b = qr.solve(y);
  const VectorXd e = y - x * b;
  const MatrixXd xtx_inv = (x.transpose() * x).inverse();
  const MatrixXd meat = x.transpose() * e.array().square().matrix().asDiagonal() * x;
  const MatrixXd v = xtx_inv * meat * xtx_inv * (static_cast<double>(n) / static_cast<double>(n - k));

  res.intercept = b(0);
  res.coef = 100.0 * b.tail(k - 1);
  res.se.resize(k - 1);
  for (Index q = 1; q < k; ++q) {
    res.se(q - 1) = 100.0 * std::sqrt(std::max(0.0, v(q, q)));
    const double se = res.se(q - 1);
    res.stars.push_back(se > 0 ? significance_stars(2.0 * (1.0 - stats::normal_cdf(std::abs(res.coef(q - 1) / se))))
                               : 0);
  }
  return res;
}

void write_loss_table(const std::filesystem::path& path, const std::vector<LossRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "model,origin,h,subsample,metric,value\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.origin << ',' << r.h << ',' << r.subsample << ',' << r.metric << ','
        << format_double(r.value) << '\n';
}

}  // namespace midas
