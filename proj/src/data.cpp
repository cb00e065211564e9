#include "midas/data.hpp"

#include "midas/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace midas {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int to_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("cannot parse " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}
}  // namespace

// --- Date / Frequency / Horizon --------------------------------------------

Date Date::parse(std::string_view text) {
  Date d;
  if (text.size() == 6 && (text[4] == 'Q' || text[4] == 'q')) {
    d.year = to_int(text.substr(0, 4), "date");
    const int q = to_int(text.substr(5, 1), "date");
    if (q < 1 || q > 4) throw DataError("invalid quarter in '" + std::string(text) + "'");
    d.month = 3 * (q - 1) + 1;
    return d;
  }
  if (text.size() != 10 && text.size() != 7) throw DataError("unparseable date '" + std::string(text) + "'");
  if (text[4] != '-') throw DataError("unparseable date '" + std::string(text) + "'");
  d.year = to_int(text.substr(0, 4), "date");
  d.month = to_int(text.substr(5, 2), "date");
  if (text.size() == 10) {
    if (text[7] != '-') throw DataError("unparseable date '" + std::string(text) + "'");
    d.day = to_int(text.substr(8, 2), "date");
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
    throw DataError("invalid date '" + std::string(text) + "'");
  return d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

Frequency parse_frequency(std::string_view tag) {
  if (tag == "monthly" || tag == "M" || tag == "m") return Frequency::monthly;
  if (tag == "quarterly" || tag == "Q" || tag == "q") return Frequency::quarterly;
  if (tag == "annual" || tag == "A" || tag == "a") return Frequency::annual;
  throw ConfigError("unknown frequency tag '" + std::string(tag) + "'");
}

int periods_per_year(Frequency f) {
  switch (f) {
    case Frequency::monthly: return 12;
    case Frequency::quarterly: return 4;
    case Frequency::annual: return 1;
  }
  return 1;
}

Horizon Horizon::parse(std::string_view text, int m) {
  Horizon h;
  h.m = m;
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    h.steps = to_int(text, "horizon") * m;
  } else {
    const int num = to_int(text.substr(0, slash), "horizon");
    const int den = to_int(text.substr(slash + 1), "horizon");
    if (den <= 0 || (num * m) % den != 0)
      throw ConfigError("horizon '" + std::string(text) + "' is not a multiple of 1/" + std::to_string(m));
    h.steps = num * m / den;
  }
  if (h.steps < 0) throw ConfigError("horizon must be nonnegative");
  return h;
}

std::string Horizon::str() const {
  if (steps % m == 0) return std::to_string(steps / m);
  return std::to_string(steps) + "/" + std::to_string(m);
}

// --- panel -----------------------------------------------------------------

void MixedFrequencyPanel::validate() const {
  if (m < 1) throw DataError("frequency ratio must be >= 1");
  if (z.rows() != m * y.size())
    throw DataError("high-frequency rows (" + std::to_string(z.rows()) + ") must equal m * T_L (" +
                    std::to_string(m * y.size()) + ")");
  if (static_cast<Index>(names.size()) != z.cols()) throw DataError("predictor names do not match panel width");
  if (static_cast<Index>(release_lag.size()) != z.cols()) throw DataError("release lags do not match panel width");
  for (int d : release_lag)
    if (d < 0) throw DataError("release lag must be nonnegative");
}

// --- transformations ---------------------------------------------------------

VectorXd transform_series(const VectorXd& x, int code, std::string_view name) {
  if (code < 1 || code > 8) throw ConfigError("transformation code must be in 1..8, got " + std::to_string(code));
  const Index n = x.size();
  const bool uses_log = code >= 4 && code <= 6;
  if (uses_log) {
    for (Index i = 0; i < n; ++i)
      if (std::isfinite(x(i)) && x(i) <= 0)
        throw DataError("series '" + std::string(name) + "' has nonpositive value at row " + std::to_string(i) +
                        " under log transformation code " + std::to_string(code));
  }
  auto diff = [](const VectorXd& v) {
    VectorXd d = VectorXd::Constant(v.size(), kNaN);
    for (Index i = 1; i < v.size(); ++i) d(i) = v(i) - v(i - 1);
    return d;
  };
  VectorXd lx = uses_log ? VectorXd(x.array().log()) : x;
  switch (code) {
    case 1: return x;
    case 2: return diff(x);
    case 3: return diff(diff(x));
    case 4: return lx;
    case 5: return diff(lx);
    case 6: return diff(diff(lx));
    case 7: {
      VectorXd g = VectorXd::Constant(n, kNaN);
      for (Index i = 1; i < n; ++i) g(i) = x(i) / x(i - 1) - 1;
      return diff(g);
    }
    case 8: {
      VectorXd g = VectorXd::Constant(n, kNaN);
      for (Index i = 1; i < n; ++i) g(i) = 100 * (std::pow(x(i) / x(i - 1), 4) - 1);
      return g;
    }
  }
  return x;
}

// --- lags ------------------------------------------------------------------

VectorXd build_hf_lag_vector(const VectorXd& z_k, int t, Horizon h, int lags, int m, int release_lag) {
  const long newest = static_cast<long>(m) * t + m - 1 - h.steps - release_lag;
  const long oldest = newest - (lags - 1);
  if (oldest < 0) {
    const long need = static_cast<long>(lags) - m + h.steps + release_lag;
    const long first = need <= 0 ? 0 : (need + m - 1) / m;
    throw DataError("insufficient high-frequency history at t=" + std::to_string(t) +
                    "; first feasible t is " + std::to_string(first));
  }
  if (newest >= z_k.size()) throw DataError("origin t=" + std::to_string(t) + " lies beyond the panel");
  VectorXd out(lags);
  for (int p = 0; p < lags; ++p) out(p) = z_k(newest - p);
  return out;
}

int first_feasible_row(const MixedFrequencyPanel& panel, int lf_lags, int hf_lags, Horizon h) {
  int first = lf_lags + h.lf_shift();
  for (Index k = 0; k < panel.predictors(); ++k) {
    const long need = static_cast<long>(hf_lags) - panel.m + h.steps + panel.release_lag[k];
    const int t = need <= 0 ? 0 : static_cast<int>((need + panel.m - 1) / panel.m);
    first = std::max(first, t);
  }
  return first;
}

MatrixXd LagData::compress(const MatrixXd& w) const {
  const Index k = static_cast<Index>(hf.size());
  MatrixXd out(size(), ylags.cols() + k * w.cols());
  out.leftCols(ylags.cols()) = ylags;
  for (Index j = 0; j < k; ++j) out.middleCols(ylags.cols() + j * w.cols(), w.cols()).noalias() = hf[j] * w;
  return out;
}

LagData build_lag_data(const MixedFrequencyPanel& panel, const std::vector<int>& rows, int lf_lags, int hf_lags,
                       Horizon h) {
  if (h.m != panel.m) throw ConfigError("horizon and panel disagree on the frequency ratio");
  LagData out;
  out.rows = rows;
  const auto n = static_cast<Index>(rows.size());
  out.y.resize(n);
  out.ylags.resize(n, lf_lags);
  out.hf.assign(panel.predictors(), MatrixXd(n, hf_lags));
  const int shift = h.lf_shift();
  for (Index i = 0; i < n; ++i) {
    const int t = rows[i];
    if (t < 0 || t >= panel.lf_periods()) throw DataError("row " + std::to_string(t) + " outside the panel");
    out.y(i) = panel.y(t);
    for (int l = 0; l < lf_lags; ++l) {
      const int s = t - 1 - shift - l;
      if (s < 0) throw DataError("insufficient low-frequency history at t=" + std::to_string(t));
      out.ylags(i, l) = panel.y(s);
      if (!std::isfinite(panel.y(s)))
        throw DataError("target lag unavailable at t=" + std::to_string(t));
    }
    for (Index k = 0; k < panel.predictors(); ++k) {
      const VectorXd lagv =
          build_hf_lag_vector(panel.z.col(k), t, h, hf_lags, panel.m, panel.release_lag[k]);
      if (!lagv.allFinite())
        throw DataError("missing high-frequency value for '" + panel.names[k] + "' at t=" + std::to_string(t));
      out.hf[k].row(i) = lagv.transpose();
    }
  }
  return out;
}

// --- standardization ---------------------------------------------------------

Standardizer Standardizer::fit(const MatrixXd& x, const VectorXd& y) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  if (x.rows() < 2) throw DataError("at least two training rows are required");
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - s.mean(j)).square().sum();
    const double sd = std::sqrt(ss / (n - 1));
    s.sd(j) = sd > 0 ? sd : 1.0;
  }
  s.y_mean = y.mean();
  const double yss = (y.array() - s.y_mean).square().sum();
  s.y_sd = std::sqrt(yss / (n - 1));
  if (!(s.y_sd > 0)) s.y_sd = 1.0;
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DataError("standardizer mismatch: column count differs from training design");
  return ((x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix();
}

// --- design ----------------------------------------------------------------

void DesignMatrix::recompress(const MatrixXd& w) {
  const MatrixXd raw = train.compress(w);
  const Standardizer fresh = Standardizer::fit(raw, train.y);
  standardizer.mean = fresh.mean;
  standardizer.sd = fresh.sd;
  x = standardizer.apply(raw);
  x_test = test.size() > 0 ? standardizer.apply(test.compress(w)) : MatrixXd(0, x.cols());
  cols_per_predictor = w.cols();
}

DesignMatrix assemble_design(const MixedFrequencyPanel& panel, const MidasWeightMatrix<double>& w, int lf_lags,
                             int hf_lags, Horizon h) {
  std::vector<int> rows;
  for (int t = first_feasible_row(panel, lf_lags, hf_lags, h); t < panel.lf_periods(); ++t)
    if (std::isfinite(panel.y(t))) rows.push_back(t);
  return assemble_design(panel, w, lf_lags, hf_lags, h, rows, {});
}

DesignMatrix assemble_design(const MixedFrequencyPanel& panel, const MidasWeightMatrix<double>& w, int lf_lags,
                             int hf_lags, Horizon h, const std::vector<int>& train_rows,
                             const std::vector<int>& test_rows) {
  panel.validate();
  if (w.lags != hf_lags) throw ConfigError("weight matrix lag count differs from P_H");
  if (lf_lags < 0) throw ConfigError("P_L must be nonnegative");
  DesignMatrix d;
  d.h = h;
  d.lf_lags = lf_lags;
  d.hf_lags = hf_lags;
  d.train = build_lag_data(panel, train_rows, lf_lags, hf_lags, h);
  d.test = build_lag_data(panel, test_rows, lf_lags, hf_lags, h);
  if (!d.train.y.allFinite()) throw DataError("training rows include unreleased target values");
  if (d.train.size() <= lf_lags)
    throw DataError("effective sample (" + std::to_string(d.train.size()) + ") must exceed P_L (" +
                    std::to_string(lf_lags) + ")");

  const MatrixXd raw = d.train.compress(w.values);
  d.standardizer = Standardizer::fit(raw, d.train.y);
  d.x = d.standardizer.apply(raw);
  d.y = d.standardizer.apply_y(d.train.y);
  d.x_test = d.test.size() > 0 ? d.standardizer.apply(d.test.compress(w.values)) : MatrixXd(0, d.x.cols());
  d.cols_per_predictor = w.cols();
  d.underdetermined = d.x.rows() < d.x.cols();

  d.group_names.push_back(panel.target_name);
  for (int l = 0; l < lf_lags; ++l) {
    d.column_names.push_back(panel.target_name + "_L" + std::to_string(l + 1));
    d.column_group.push_back(0);
  }
  for (Index k = 0; k < panel.predictors(); ++k) {
    d.group_names.push_back(panel.names[k]);
    for (Index c = 0; c < w.cols(); ++c) {
      d.column_names.push_back(panel.names[k] + "_w" + std::to_string(c));
      d.column_group.push_back(static_cast<int>(k) + 1);
    }
  }
  return d;
}

std::vector<int> training_rows_for_target(const MixedFrequencyPanel& panel, int lf_lags, int hf_lags, Horizon h,
                                          int target) {
  std::vector<int> rows;
  const int last = target - 1 - h.lf_shift();
  for (int t = first_feasible_row(panel, lf_lags, hf_lags, h); t <= last; ++t)
    if (std::isfinite(panel.y(t))) rows.push_back(t);
  return rows;
}

// --- ingestion ---------------------------------------------------------------

SeriesSchema SeriesSchema::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  SeriesSchema s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto kv = parse_key_value(line);
    if (!kv) continue;
    const auto& [key, value] = *kv;
    if (key == "date_column") {
      s.date_column = value;
    } else if (key == "frequency") {
      s.frequency = parse_frequency(value);
    } else if (key.ends_with(".tcode")) {
      s.transform[key.substr(0, key.size() - 6)] = to_int(value, "transform code");
    } else if (key.ends_with(".release_lag")) {
      s.release_lag[key.substr(0, key.size() - 12)] = to_int(value, "release lag");
    } else {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown schema key '" + key + "'");
    }
  }
  return s;
}

SeriesTable ingest_csv(const std::filesystem::path& path, const SeriesSchema& schema) {
  const CsvTable csv = read_csv(path);
  const auto date_col = csv.column_index(schema.date_column);
  if (!date_col) throw DataError(path.string() + ": missing date column '" + schema.date_column + "'");

  SeriesTable table;
  table.frequency = schema.frequency;
  std::vector<std::size_t> value_cols;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (j == *date_col) continue;
    value_cols.push_back(j);
    table.names.push_back(csv.header[j]);
  }
  for (const auto& [name, code] : schema.transform)
    if (std::find(table.names.begin(), table.names.end(), name) == table.names.end())
      throw ConfigError("schema names unknown column '" + name + "'");

  const auto n = static_cast<Index>(csv.rows.size());
  MatrixXd raw(n, static_cast<Index>(value_cols.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& row = csv.rows[i];
    if (row.size() != csv.header.size())
      throw DataError(path.string() + ": ragged row " + std::to_string(i + 2) + " (" + std::to_string(row.size()) +
                      " cells, header has " + std::to_string(csv.header.size()) + ")");
    const Date d = Date::parse(row[*date_col]);
    if (!table.dates.empty() && !(table.dates.back() < d))
      throw DataError(path.string() + ": dates not strictly increasing at row " + std::to_string(i + 2));
    table.dates.push_back(d);
    for (std::size_t j = 0; j < value_cols.size(); ++j) {
      const auto v = parse_cell(row[value_cols[j]]);
      if (!v)
        throw DataError(path.string() + ": unparseable cell '" + row[value_cols[j]] + "' in column '" +
                        table.names[j] + "' row " + std::to_string(i + 2));
      raw(i, static_cast<Index>(j)) = *v;
    }
  }

  table.values.resize(n, raw.cols());
  for (Index j = 0; j < raw.cols(); ++j) {
    const auto& name = table.names[j];
    const auto it = schema.transform.find(name);
    const int code = it == schema.transform.end() ? 1 : it->second;
    try {
      table.values.col(j) = transform_series(raw.col(j), code, name);
    } catch (const DataError&) {
      for (Index i = 0; i < n; ++i)
        if (std::isfinite(raw(i, j)) && raw(i, j) <= 0 && code >= 4 && code <= 6)
          throw DataError(path.string() + ": series '" + name + "' has nonpositive value " +
                          std::to_string(raw(i, j)) + " at " + table.dates[i].iso() + " (row " +
                          std::to_string(i + 2) + ") under log transformation code " + std::to_string(code));
      throw;
    }
    const auto lag = schema.release_lag.find(name);
    table.release_lag.push_back(lag == schema.release_lag.end() ? 1 : lag->second);
  }

  // trim leading rows with any missing value
  Index first = 0;
  while (first < n && !table.values.row(first).allFinite()) ++first;
  if (first == n) throw DataError(path.string() + ": no row without missing values");
  table.values = table.values.bottomRows(n - first).eval();
  table.dates.erase(table.dates.begin(), table.dates.begin() + first);
  return table;
}

MixedFrequencyPanel make_panel(const SeriesTable& lf, const std::string& target, const SeriesTable& hf,
                               const std::vector<std::string>& predictors) {
  const int ratio = periods_per_year(hf.frequency) / periods_per_year(lf.frequency);
  if (ratio < 1 || periods_per_year(hf.frequency) % periods_per_year(lf.frequency) != 0)
    throw DataError("high-frequency table must have a frequency that is an integer multiple of the target's");
  const auto tcol = std::find(lf.names.begin(), lf.names.end(), target);
  if (tcol == lf.names.end()) throw DataError("target column '" + target + "' not found");
  const Index tj = tcol - lf.names.begin();

  std::vector<Index> cols;
  if (predictors.empty()) {
    for (Index j = 0; j < static_cast<Index>(hf.names.size()); ++j) cols.push_back(j);
  } else {
    for (const auto& p : predictors) {
      const auto it = std::find(hf.names.begin(), hf.names.end(), p);
      if (it == hf.names.end()) throw DataError("predictor '" + p + "' not found");
      cols.push_back(it - hf.names.begin());
    }
  }

  const int lf_per_year = periods_per_year(lf.frequency);
  const int hf_per_year = periods_per_year(hf.frequency);
  auto lf_index = [&](const Date& d) { return d.year * lf_per_year + (d.month - 1) / (12 / lf_per_year); };
  auto hf_index = [&](const Date& d) { return d.year * hf_per_year + (d.month - 1) / (12 / hf_per_year); };

  // first LF period whose first HF sub-period is covered
  const int lf_first_hf = (hf_index(hf.dates.front()) + ratio - 1) / ratio;
  const int start = std::max(lf_index(lf.dates.front()), lf_first_hf);
  const int end = std::max(lf_index(lf.dates.back()), hf_index(hf.dates.back()) / ratio);
  if (end < start) throw DataError("low- and high-frequency tables do not overlap");

  MixedFrequencyPanel p;
  p.m = ratio;
  p.target_name = target;
  const int tl = end - start + 1;
  p.y = VectorXd::Constant(tl, kNaN);
  p.z = MatrixXd::Constant(static_cast<Index>(tl) * ratio, static_cast<Index>(cols.size()), kNaN);
  for (std::size_t i = 0; i < lf.dates.size(); ++i) {
    const int t = lf_index(lf.dates[i]) - start;
    if (t >= 0 && t < tl) p.y(t) = lf.values(static_cast<Index>(i), tj);
  }
  for (std::size_t i = 0; i < hf.dates.size(); ++i) {
    const int s = hf_index(hf.dates[i]) - start * ratio;
    if (s < 0 || s >= p.z.rows()) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) p.z(s, static_cast<Index>(c)) = hf.values(static_cast<Index>(i), cols[c]);
  }
  for (int t = 0; t < tl; ++t) {
    const int month = (start + t) % lf_per_year * (12 / lf_per_year) + 1;
    p.dates.push_back(Date{(start + t) / lf_per_year, month, 1});
  }
  for (Index c : cols) {
    p.names.push_back(hf.names[c]);
    p.release_lag.push_back(hf.release_lag[c]);
  }

  // interior gaps are rejected; trailing gaps form the ragged edge
  auto check_interior = [](const auto& v, const std::string& name) {
    Index last = -1;
    for (Index i = 0; i < v.size(); ++i)
      if (std::isfinite(v(i))) last = i;
    for (Index i = 0; i < last; ++i)
      if (!std::isfinite(v(i)))
        throw DataError("series '" + name + "' has an interior missing value at position " + std::to_string(i));
  };
  check_interior(p.y, target);
  for (Index c = 0; c < p.z.cols(); ++c) check_interior(p.z.col(c), p.names[c]);
  p.validate();
  return p;
}

}  // namespace midas
