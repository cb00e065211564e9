#include "midas/config.hpp"
#include "midas/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace midas;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "midas_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("CSV splitting handles quotes and trims") {
  const auto cells = split_csv_line(R"(a, "b,c" ,"say ""hi""",)");
  REQUIRE(cells.size() == 4);
  CHECK(cells[0] == "a");
  CHECK(cells[1] == "b,c");
  CHECK(cells[2] == "say \"hi\"");
  CHECK(cells[3].empty());
}

TEST_CASE("cell parsing") {
  CHECK(*parse_cell("1.5") == 1.5);
  CHECK(std::isnan(*parse_cell("")));
  CHECK(std::isnan(*parse_cell("NA")));
  CHECK(std::isnan(*parse_cell(".")));
  CHECK_FALSE(parse_cell("1.5x").has_value());
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("required column error names the column") {
  CsvTable t;
  t.header = {"model", "value"};
  try {
    t.require("realization");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("realization") != std::string::npos);
  }
}

TEST_CASE("key=value parsing") {
  CHECK_FALSE(parse_key_value("# comment").has_value());
  CHECK_FALSE(parse_key_value("   ").has_value());
  const auto kv = parse_key_value("  iters =  500 ");
  REQUIRE(kv.has_value());
  CHECK(kv->first == "iters");
  CHECK(kv->second == "500");
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("column store round trip is bit exact") {
  ColumnStore s;
  s.header_json = R"({"note":"x"})";
  MatrixXd a(3, 2);
  a << 1, 2, 3, 4, 5, std::nan("");
  s.add("a", a);
  s.add("empty", MatrixXd(0, 4));
  const auto path = temp_path("store.mcol");
  s.write(path);
  const auto r = ColumnStore::read(path);
  CHECK(r.header_json == s.header_json);
  const MatrixXd& b = r.get("a");
  REQUIRE(b.rows() == 3);
  CHECK(b.topRows(2) == a.topRows(2));
  CHECK(std::isnan(b(2, 1)));
  CHECK(r.get("empty").cols() == 4);
  CHECK_FALSE(r.has("missing"));
  CHECK_THROWS_AS(r.get("missing"), DataError);
}

TEST_CASE("column store rejects foreign files") {
  const auto path = temp_path("junk.bin");
  std::ofstream(path) << "not a store at all";
  CHECK_THROWS_AS(ColumnStore::read(path), DataError);
}

TEST_CASE("config defaults") {
  const ModelConfig c;
  CHECK(c.lf_lags == 4);
  CHECK(c.hf_lags == 12);
  CHECK(c.m == 3);
  CHECK(c.mcmc.iters == 12000);
  CHECK(c.mcmc.burn == 3000);
  CHECK(c.mcmc.thin == 3);
  CHECK(c.mcmc.retained() == 3000);
  CHECK(c.bart.trees == 250);
}

TEST_CASE("keep() retains exactly retained() iterations") {
  McmcSettings s{100, 31, 3};
  int kept = 0;
  for (int it = 0; it < s.iters; ++it) kept += s.keep(it) ? 1 : 0;
  CHECK(kept == s.retained());
  CHECK_FALSE(s.keep(31));
  CHECK(s.keep(33));
}

TEST_CASE("config key=value round trip and id") {
  ModelConfig c;
  c.mean = MeanModel::bart;
  c.variance = VarianceModel::sv;
  c.scheme = Scheme::leg;
  c.degree = 2;
  c.horizon = Horizon{4, 3};
  c.predictors = {"a", "b"};
  c.theta_init = {0.25, -0.125};
  const auto back = ModelConfig::from_key_values(c.to_key_values());
  CHECK(back.canonical() == c.canonical());
  CHECK(c.id() == "BART-sv-leg2-s");
  ModelConfig g;
  g.scheme = Scheme::xalm;
  CHECK(g.id() == "GP-hom-xalm-s");
}

TEST_CASE("unknown keys are rejected") {
  try {
    ModelConfig::from_key_values({{"iter", "10"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("iter") != std::string::npos);
  }
  CHECK_THROWS_AS(ModelConfig::from_key_values({{"iters", "ten"}}), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_key_values({{"mean", "SVM"}}), ConfigError);
}

TEST_CASE("invalid settings are rejected") {
  ModelConfig c;
  c.mcmc.burn = c.mcmc.iters;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ModelConfig d;
  d.scheme = Scheme::alm;
  d.degree = 0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  ModelConfig e;
  e.bart.p_swap = 0.5;
  CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("the shipped default config file equals the built-in defaults") {
  const auto path = std::filesystem::path(MIDAS_SOURCE_DIR) / "configs" / "default.cfg";
  REQUIRE(std::filesystem::exists(path));
  CHECK(ModelConfig::load(path).canonical() == ModelConfig{}.canonical());
}
