#include "midas/data.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace midas;

namespace {

MixedFrequencyPanel counter_panel(int t_lf, int k, int m = 3) {
  MixedFrequencyPanel p;
  p.m = m;
  p.y.resize(t_lf);
  for (int t = 0; t < t_lf; ++t) p.y(t) = std::sin(0.7 * t) + 0.01 * t;
  p.z.resize(static_cast<Index>(t_lf) * m, k);
  for (Index s = 0; s < p.z.rows(); ++s)
    for (Index j = 0; j < k; ++j) p.z(s, j) = static_cast<double>(s) + 1000.0 * static_cast<double>(j);
  for (int j = 0; j < k; ++j) p.names.push_back("z" + std::to_string(j + 1));
  p.release_lag.assign(k, 1);
  return p;
}

MixedFrequencyPanel random_panel(int t_lf, int k, std::uint64_t seed) {
  Rng rng(seed);
  MixedFrequencyPanel p = counter_panel(t_lf, k);
  for (Index i = 0; i < p.z.size(); ++i) p.z.data()[i] = rng.normal();
  for (int t = 0; t < t_lf; ++t) p.y(t) = rng.normal();
  return p;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "midas_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("transformation codes") {
  VectorXd x(3);
  x << 1, 2, 3;
  CHECK(transform_series(x, 1) == x);

  VectorXd c = VectorXd::Constant(3, 4.2);
  const VectorXd g = transform_series(c, 8);
  CHECK(std::isnan(g(0)));
  CHECK(g(1) == 0.0);
  CHECK(g(2) == 0.0);

  VectorXd e(3);
  e << 1, std::exp(1.0), std::exp(2.0);
  const VectorXd dl = transform_series(e, 5);
  CHECK(std::isnan(dl(0)));
  CHECK(dl(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(dl(2) == doctest::Approx(1.0).epsilon(1e-14));

  VectorXd q(4);
  q << 100, 101, 103, 102;
  const VectorXd d2 = transform_series(q, 3);
  CHECK(std::isnan(d2(1)));
  CHECK(d2(2) == doctest::Approx(1.0));
  CHECK(d2(3) == doctest::Approx(-3.0));
  const VectorXd a8 = transform_series(q, 8);
  CHECK(a8(1) == doctest::Approx(100 * (std::pow(1.01, 4) - 1)));
  const VectorXd c7 = transform_series(q, 7);
  CHECK(c7(2) == doctest::Approx((103.0 / 101 - 1) - (101.0 / 100 - 1)));
  const VectorXd l4 = transform_series(q, 4);
  CHECK(l4(0) == doctest::Approx(std::log(100.0)));
  const VectorXd l6 = transform_series(q, 6);
  CHECK(l6(2) == doctest::Approx(std::log(103.0 / 101) - std::log(101.0 / 100)));
}

TEST_CASE("log transformations reject nonpositive values naming the series") {
  VectorXd x(3);
  x << 1, 0, 2;
  try {
    transform_series(x, 5, "INDPRO");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("INDPRO") != std::string::npos);
  }
  CHECK_THROWS_AS(transform_series(x, 9), ConfigError);
  CHECK_NOTHROW(transform_series(x, 2));
}

TEST_CASE("high-frequency lag vector indexing") {
  VectorXd z(60);
  for (Index s = 0; s < 60; ++s) z(s) = static_cast<double>(s);
  // quarter 10 covers months 30..32; the nowcast in its last month sees 31, 30, 29
  const VectorXd v = build_hf_lag_vector(z, 10, Horizon{0, 3}, 3, 3);
  CHECK(v(0) == 31);
  CHECK(v(1) == 30);
  CHECK(v(2) == 29);
  const VectorXd v1 = build_hf_lag_vector(z, 10, Horizon{3, 3}, 3, 3);
  CHECK(v1(0) == 28);
  CHECK(v1(2) == 26);
  const VectorXd one = build_hf_lag_vector(z, 10, Horizon{0, 3}, 1, 3);
  REQUIRE(one.size() == 1);
  CHECK(one(0) == 31);
  // release lag 0: the last month of the quarter is available
  CHECK(build_hf_lag_vector(z, 10, Horizon{0, 3}, 2, 3, 0)(0) == 32);
}

TEST_CASE("insufficient history reports the first feasible t") {
  VectorXd z = VectorXd::LinSpaced(60, 0, 59);
  try {
    build_hf_lag_vector(z, 2, Horizon{0, 3}, 12, 3);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("first feasible t is 4") != std::string::npos);
  }
  CHECK_NOTHROW(build_hf_lag_vector(z, 4, Horizon{0, 3}, 12, 3));
}

TEST_CASE("horizon parsing") {
  CHECK(Horizon::parse("0", 3).steps == 0);
  CHECK(Horizon::parse("1/3", 3).steps == 1);
  CHECK(Horizon::parse("4/3", 3).steps == 4);
  CHECK(Horizon::parse("5/3", 3).lf_shift() == 1);
  CHECK(Horizon::parse("1", 3).steps == 3);
  CHECK(Horizon{4, 3}.str() == "4/3");
  CHECK(Horizon{3, 3}.str() == "1");
  CHECK_THROWS_AS(Horizon::parse("1/2", 3), ConfigError);
}

TEST_CASE("design column counts") {
  const auto p1 = random_panel(40, 1, 1);
  CHECK(assemble_design(p1, build_weight_matrix<double>(Scheme::br, 12, 0, 3), 4, 12, Horizon{0, 3}).cols() == 5);

  const auto p12 = random_panel(80, 12, 2);
  const auto d = assemble_design(p12, build_weight_matrix<double>(Scheme::leg, 12, 3, 3), 4, 12, Horizon{0, 3});
  CHECK(d.cols() == 4 + 12 * 4);
  CHECK(d.column_names.size() == 52);
  CHECK(d.group_names.size() == 13);

  const auto p116 = random_panel(12, 116, 3);
  const auto du = assemble_design(p116, build_weight_matrix<double>(Scheme::u, 12, 0, 3), 4, 12, Horizon{0, 3});
  CHECK(du.cols() == 1396);
  CHECK(du.underdetermined);
}

TEST_CASE("standardized columns have mean 0 and sd 1; round trip of the target") {
  const auto p = random_panel(60, 3, 5);
  const auto d = assemble_design(p, build_weight_matrix<double>(Scheme::alm, 12, 2, 3), 4, 12, Horizon{0, 3});
  for (Index j = 0; j < d.cols(); ++j) {
    const VectorXd c = d.x.col(j);
    const double mean = c.mean();
    const double sd = std::sqrt((c.array() - mean).square().sum() / (c.size() - 1));
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(sd - 1) < 1e-10);
  }
  CHECK(std::abs(d.y.mean()) < 1e-10);
  const VectorXd back = d.standardizer.destandardize(d.y);
  CHECK((back - d.train.y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("design at h + 1/m shifts every HF lag one period deeper") {
  const auto p = counter_panel(30, 2);
  std::vector<int> rows{10, 11, 12, 13, 14, 15};
  const auto d0 = build_lag_data(p, rows, 2, 12, Horizon{0, 3});
  const auto d1 = build_lag_data(p, rows, 2, 12, Horizon{1, 3});
  for (std::size_t k = 0; k < 2; ++k) CHECK((d1.hf[k].array() == d0.hf[k].array() - 1).all());
  CHECK(d1.ylags == d0.ylags);  // floor(1/3) = 0
  const auto d3 = build_lag_data(p, rows, 2, 12, Horizon{3, 3});
  CHECK(d3.ylags(0, 0) == p.y(10 - 2));
}

TEST_CASE("compression commutes with stacking") {
  const auto p = random_panel(50, 3, 9);
  const auto w = build_weight_matrix<double>(Scheme::ber, 12, 3, 3);
  const auto u = build_weight_matrix<double>(Scheme::u, 12, 0, 3);
  const auto du = assemble_design(p, u, 2, 12, Horizon{0, 3});
  const auto dw = assemble_design(p, w, 2, 12, Horizon{0, 3});
  // raw (unstandardized) regressors
  MatrixXd from_u(du.train.size(), 2 + 3 * 4);
  from_u.leftCols(2) = du.train.ylags;
  for (int k = 0; k < 3; ++k) {
    const MatrixXd block = du.train.compress(u.values).middleCols(2 + 12 * k, 12);
    from_u.middleCols(2 + 4 * k, 4) = block * w.values;
  }
  CHECK((from_u - dw.train.compress(w.values)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("training rows for a target respect floor(h)") {
  const auto p = random_panel(40, 1, 4);
  const auto rows = training_rows_for_target(p, 4, 12, Horizon{3, 3}, 30);
  CHECK(rows.back() == 28);
  CHECK(rows.front() == first_feasible_row(p, 4, 12, Horizon{3, 3}));
  const auto rows0 = training_rows_for_target(p, 4, 12, Horizon{0, 3}, 30);
  CHECK(rows0.back() == 29);
}

TEST_CASE("test rows reuse the training standardizer") {
  const auto p = random_panel(60, 2, 13);
  const auto w = build_weight_matrix<double>(Scheme::br, 12, 0, 3);
  std::vector<int> train;
  for (int t = 5; t < 50; ++t) train.push_back(t);
  const auto d = assemble_design(p, w, 4, 12, Horizon{0, 3}, train, {55});
  const MatrixXd raw_test = d.test.compress(w.values);
  const MatrixXd expect = d.standardizer.apply(raw_test);
  CHECK((d.x_test - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("effective sample must exceed P_L") {
  const auto p = random_panel(20, 1, 6);
  const auto w = build_weight_matrix<double>(Scheme::br, 12, 0, 3);
  CHECK_THROWS_AS(assemble_design(p, w, 4, 12, Horizon{0, 3}, {10, 11, 12}, {}), DataError);
}

TEST_CASE("ingest quarterly CSV with code 8 and monthly CSV with code 2") {
  const auto q = temp_file("gdp.csv", "date,GDP\n2000-01-01,100\n2000-04-01,101\n2000-07-01,102.5\n2000-10-01,103\n");
  SeriesSchema qs;
  qs.frequency = Frequency::quarterly;
  qs.transform["GDP"] = 8;
  const auto tq = ingest_csv(q, qs);
  REQUIRE(tq.values.rows() == 3);  // leading NaN trimmed
  CHECK(tq.dates.front() == Date{2000, 4, 1});
  CHECK(tq.values(0, 0) == doctest::Approx(100 * (std::pow(1.01, 4) - 1)));

  const auto mth = temp_file("rates.csv", "date,FF\n2000-01-01,5.0\n2000-02-01,5.25\n2000-03-01,5.5\n");
  const auto schema = temp_file("rates.schema", "frequency=monthly\nFF.tcode=2\nFF.release_lag=0\n");
  const auto tm = ingest_csv(mth, SeriesSchema::read(schema));
  CHECK(tm.values(0, 0) == doctest::Approx(0.25));
  CHECK(tm.release_lag[0] == 0);
}

TEST_CASE("ingest errors") {
  SeriesSchema s;
  s.transform["X"] = 5;
  const auto zero = temp_file("zero.csv", "date,X\n2000-01-01,1\n2000-02-01,0\n");
  try {
    ingest_csv(zero, s);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'X'") != std::string::npos);
    CHECK(msg.find("row 3") != std::string::npos);
  }
  SeriesSchema plain;
  CHECK_THROWS_AS(ingest_csv(temp_file("ragged.csv", "date,X,Y\n2000-01-01,1\n"), plain), DataError);
  CHECK_THROWS_AS(ingest_csv(temp_file("bad.csv", "date,X\n2000-01-01,abc\n"), plain), DataError);
  CHECK_THROWS_AS(ingest_csv(temp_file("order.csv", "date,X\n2000-02-01,1\n2000-01-01,2\n"), plain), DataError);
  CHECK_THROWS_AS(SeriesSchema::read(temp_file("typo.schema", "frequncy=monthly\n")), ConfigError);
}

TEST_CASE("make_panel aligns quarters with months") {
  SeriesTable lf;
  lf.frequency = Frequency::quarterly;
  lf.names = {"y"};
  lf.dates = {Date{2000, 1, 1}, Date{2000, 4, 1}, Date{2000, 7, 1}};
  lf.values.resize(3, 1);
  lf.values << 1, 2, 3;
  lf.release_lag = {1};
  SeriesTable hf;
  hf.frequency = Frequency::monthly;
  hf.names = {"a", "b"};
  for (int mth = 1; mth <= 9; ++mth) hf.dates.push_back(Date{2000, mth, 1});
  hf.values.resize(9, 2);
  for (Index i = 0; i < 9; ++i) hf.values.row(i) << static_cast<double>(i), -static_cast<double>(i);
  hf.release_lag = {1, 2};
  const auto p = make_panel(lf, "y", hf, {"b"});
  CHECK(p.m == 3);
  CHECK(p.y.size() == 3);
  CHECK(p.z.rows() == 9);
  CHECK(p.z.cols() == 1);
  CHECK(p.z(4, 0) == -4);
  CHECK(p.release_lag[0] == 2);
  CHECK(p.dates[2] == Date{2000, 7, 1});
  CHECK_THROWS_AS(make_panel(lf, "gdp", hf), DataError);
}

TEST_CASE("date parsing") {
  CHECK(Date::parse("2019Q4") == Date{2019, 10, 1});
  CHECK(Date::parse("2019-12") == Date{2019, 12, 1});
  CHECK(Date::parse("2019-12-31").iso() == "2019-12-31");
  CHECK_THROWS_AS(Date::parse("12/31/2019"), DataError);
}
