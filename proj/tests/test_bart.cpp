#include "midas/bart.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

using namespace midas;

namespace {

struct Fixture {
  MatrixXd x;
  CutpointGrid grid;
  BartConfig config;
  double v = 0.5;
  TreeContext ctx() const { return TreeContext{x, grid, config, v}; }
};

// var 0 takes four values (3 cuts), var 1 two values (1 cut)
Fixture small_fixture() {
  Fixture f;
  f.x.resize(8, 2);
  f.x << 0, 0, 1, 1, 2, 0, 3, 1, 0, 1, 1, 0, 2, 1, 3, 0;
  f.grid = CutpointGrid::from_data(f.x);
  f.config.trees = 1;
  return f;
}

// Independent enumeration of every tree the rule prior can produce, with its
// unnormalized log posterior computed from first principles.
struct Enumerated {
  std::string key;
  double log_post;
};

struct Range {
  int lo[2];
  int hi[2];
};

void enumerate(const Fixture& f, const VectorXd& r, const VectorXd& w, const Range& range, std::vector<int> rows,
               int depth, std::vector<Enumerated>& out) {
  const double ps = f.config.alpha * std::pow(1.0 + depth, -f.config.beta);
  int nv = 0;
  for (int v = 0; v < 2; ++v) nv += range.hi[v] > range.lo[v] ? 1 : 0;

  double sw = 0, swr = 0;
  for (int i : rows) {
    sw += w(i);
    swr += w(i) * r(i);
  }
  const double leaf_ll = rows.empty() ? 0.0 : -0.5 * std::log(1 + f.v * sw) + 0.5 * swr * swr / (sw + 1 / f.v);
  out.push_back({".", (nv > 0 ? std::log(1 - ps) : 0.0) + leaf_ll});

  for (int v = 0; v < 2; ++v)
    for (int c = range.lo[v]; c < range.hi[v]; ++c) {
      const double cutval = f.grid.cuts[v][c];
      std::vector<int> lr, rr;
      for (int i : rows) (f.x(i, v) <= cutval ? lr : rr).push_back(i);
      Range left = range, right = range;
      left.hi[v] = c;
      right.lo[v] = c + 1;
      std::vector<Enumerated> ls, rs;
      enumerate(f, r, w, left, lr, depth + 1, ls);
      enumerate(f, r, w, right, rr, depth + 1, rs);
      const double rule = std::log(ps) - std::log(nv) - std::log(range.hi[v] - range.lo[v]);
      for (const auto& a : ls)
        for (const auto& b : rs)
          out.push_back({"(" + std::to_string(v) + ":" + std::to_string(c) + " " + a.key + " " + b.key + ")",
                         rule + a.log_post + b.log_post});
    }
}

}  // namespace

TEST_CASE("prior constants") {
  BartConfig c;
  CHECK(c.split_probability(0) == doctest::Approx(0.95));
  CHECK(c.split_probability(1) == doctest::Approx(0.95 / 4));
  c.trees = 250;
  c.gamma = 2;
  CHECK(c.leaf_prior_variance(4.0) == doctest::Approx(16.0 / (4 * 4 * 250)));
  c.p_swap = 0.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("cutpoints are midpoints of unique sorted values") {
  MatrixXd x(5, 2);
  x << 3, 1, 1, 1, 2, 1, 1, 1, 5, 1;
  const auto g = CutpointGrid::from_data(x);
  REQUIRE(g.count(0) == 3);
  CHECK(g.cuts[0][0] == 1.5);
  CHECK(g.cuts[0][1] == 2.5);
  CHECK(g.cuts[0][2] == 4.0);
  CHECK(g.count(1) == 0);
  CHECK(g.variables_with_cuts() == 1);
}

TEST_CASE("stump cannot merge or swap") {
  const auto f = small_fixture();
  const auto ctx = f.ctx();
  const auto s = RegressionTree::stump();
  Rng rng(1);
  CHECK_FALSE(propose(s, ctx, TreeMove::merge, rng).has_value());
  CHECK_FALSE(propose(s, ctx, TreeMove::swap, rng).has_value());
  CHECK_FALSE(propose(s, ctx, TreeMove::change, rng).has_value());
  CHECK_FALSE(propose_merge(s, ctx, 0).has_value());
  CHECK(propose(s, ctx, TreeMove::grow, rng).has_value());
}

TEST_CASE("grow and the reverse merge have reciprocal proposal ratios") {
  const auto f = small_fixture();
  const auto ctx = f.ctx();
  Rng rng(2);
  auto t = RegressionTree::stump();
  for (int step = 0; step < 40; ++step) {
    auto g = propose(t, ctx, TreeMove::grow, rng);
    if (!g) break;
    // the grown leaf is now the only node whose children are new leaves
    int grown = -1;
    for (int id : g->tree.mergeable_nodes())
      if (g->tree.node(id).depth >= 0 && (id >= static_cast<int>(t.nodes().size()) || t.node(id).is_leaf()))
        grown = id;
    REQUIRE(grown >= 0);
    const auto m = propose_merge(g->tree, ctx, grown);
    REQUIRE(m.has_value());
    CHECK(g->log_q_ratio + m->log_q_ratio == doctest::Approx(0).epsilon(1e-12));
    CHECK(m->tree.structure_key() == t.structure_key());
    t = g->tree;
  }
}

TEST_CASE("change and swap are their own reverses") {
  const auto f = small_fixture();
  const auto ctx = f.ctx();
  auto t = RegressionTree::stump();
  const auto [l, r] = t.split(0, 0, 1);
  t.split(l, 1, 0);
  t.split(r, 0, 2);
  const auto c = propose_change(t, ctx, 0, 1, 0);
  REQUIRE(c.has_value());
  const auto back = propose_change(c->tree, ctx, 0, 0, 1);
  REQUIRE(back.has_value());
  CHECK(c->log_q_ratio + back->log_q_ratio == doctest::Approx(0));
  CHECK(back->tree.structure_key() == t.structure_key());

  const auto s = propose_swap(t, ctx, 0, l);
  REQUIRE(s.has_value());
  CHECK(s->tree.node(0).var == 1);
  CHECK(s->tree.node(l).var == 0);
  const auto s2 = propose_swap(s->tree, ctx, 0, l);
  REQUIRE(s2.has_value());
  CHECK(s2->tree.structure_key() == t.structure_key());
}

TEST_CASE("leaves partition the rows and follow the rules") {
  Rng rng(3);
  MatrixXd x(60, 3);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto grid = CutpointGrid::from_data(x);
  BartConfig cfg;
  const TreeContext ctx{x, grid, cfg, 1.0};
  auto t = RegressionTree::stump();
  for (int i = 0; i < 8; ++i)
    if (auto g = propose(t, ctx, TreeMove::grow, rng)) t = g->tree;
  REQUIRE(t.leaf_count() == 9);
  std::vector<int> hits(t.nodes().size(), 0);
  for (Index i = 0; i < x.rows(); ++i) {
    const int leaf = t.find_leaf(x, i, grid);
    CHECK(t.node(leaf).is_leaf());
    ++hits[leaf];
    // walk back up: every ancestor's rule agrees with the branch taken
    for (int c = leaf, p = t.node(leaf).parent; p >= 0; c = p, p = t.node(p).parent) {
      const auto& a = t.node(p);
      const bool goes_left = x(i, a.var) <= grid.cuts[a.var][a.cut];
      CHECK(goes_left == (a.left == c));
    }
  }
  int total = 0;
  for (int h : hits) total += h;
  CHECK(total == 60);
  CHECK(std::isfinite(tree_log_prior(t, ctx)));
}

TEST_CASE("leaf with no rows draws from the prior") {
  MatrixXd wide(4, 1);
  wide << 0, 1, 2, 3;
  const auto grid = CutpointGrid::from_data(wide);
  MatrixXd x(3, 1);
  x << 0, 0.2, 0.4;  // all fall left of every cut
  BartConfig cfg;
  const double v = 0.3;
  const TreeContext ctx{x, grid, cfg, v};
  auto t = RegressionTree::stump();
  const auto [l, r] = t.split(0, 0, 1);
  Rng rng(4);
  const int n = 50000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    sample_leaf_params(t, ctx, VectorXd::Constant(3, 5.0), VectorXd::Ones(3), rng);
    s += t.node(r).mu;
    s2 += t.node(r).mu * t.node(r).mu;
  }
  CHECK(std::abs(s / n) < 5 * std::sqrt(v / n));
  CHECK(s2 / n == doctest::Approx(v).epsilon(0.03));
  // the populated leaf: posterior mean 15 / (3 + 1/v)
  sample_leaf_params(t, ctx, VectorXd::Constant(3, 5.0), VectorXd::Constant(3, 1e-12), rng);
  CHECK(t.node(l).mu == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("single-tree MH chain matches the enumerated structure posterior") {
  auto f = small_fixture();
  f.config.alpha = 0.9;
  f.config.beta = 1.0;
  const auto ctx = f.ctx();
  Rng rng(5);
  VectorXd r(8);
  for (Index i = 0; i < 8; ++i) r(i) = (f.x(i, 0) >= 2 ? 1.0 : -0.5) + 0.8 * rng.normal();
  const VectorXd w = VectorXd::Constant(8, 1.0 / 0.5);

  std::vector<Enumerated> all;
  enumerate(f, r, w, Range{{0, 0}, {3, 1}}, {0, 1, 2, 3, 4, 5, 6, 7}, 0, all);
  double mx = -1e300;
  for (const auto& e : all) mx = std::max(mx, e.log_post);
  std::map<std::string, double> target;
  double z = 0;
  for (const auto& e : all) {
    target[e.key] += std::exp(e.log_post - mx);
    z += std::exp(e.log_post - mx);
  }
  REQUIRE(target.size() == all.size());
  for (auto& [k, p] : target) p /= z;

  // the implementation's own prior and likelihood agree with the enumeration on every tree
  auto t = RegressionTree::stump();
  std::map<std::string, int> counts;
  const int n = 2000000;  // 555 structures; total variation shrinks like n^-1/2
  for (int i = 0; i < n; ++i) {
    tree_mh_step(t, ctx, r, VectorXd::Constant(8, 0.5), rng);
    ++counts[t.structure_key()];
  }
  double tv = 0;
  for (const auto& [k, p] : target) {
    const auto it = counts.find(k);
    tv += std::abs(p - (it == counts.end() ? 0.0 : it->second / double(n)));
  }
  for (const auto& [k, c] : counts) CHECK_MESSAGE(target.count(k) == 1, "unexpected structure " << k);
  CHECK(0.5 * tv < 0.015);
}

TEST_CASE("forest fits a step function") {
  Rng rng(6);
  const Index n = 200;
  MatrixXd x(n, 3);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  VectorXd f(n), y(n);
  for (Index i = 0; i < n; ++i) {
    f(i) = x(i, 0) > 0.2 ? 1.0 : -1.0;
    y(i) = f(i) + 0.2 * rng.normal();
  }
  BartConfig cfg;
  cfg.trees = 50;
  const auto grid = CutpointGrid::from_data(x);
  const TreeContext ctx{x, grid, cfg, cfg.leaf_prior_variance(y.maxCoeff() - y.minCoeff())};
  auto forest = Forest::stumps(cfg.trees, n);
  VectorXd avg = VectorXd::Zero(n);
  int kept = 0;
  for (int it = 0; it < 400; ++it) {
    const VectorXd& fit = bart_sweep(forest, ctx, y, VectorXd::Constant(n, 0.04), rng);
    if (it >= 200) {
      avg += fit;
      ++kept;
    }
  }
  avg /= kept;
  const double r2 = 1 - (f - avg).squaredNorm() / (f.array() - f.mean()).square().sum();
  CHECK(r2 > 0.9);
  CHECK((forest.predict(x, grid) - forest.total).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero targets keep the forest near zero") {
  Rng rng(8);
  const Index n = 80;
  MatrixXd x(n, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  BartConfig cfg;
  cfg.trees = 20;
  const auto grid = CutpointGrid::from_data(x);
  const double v = cfg.leaf_prior_variance(4.0);
  const TreeContext ctx{x, grid, cfg, v};
  auto forest = Forest::stumps(cfg.trees, n);
  double sum = 0;
  int kept = 0;
  for (int it = 0; it < 300; ++it) {
    const VectorXd& fit = bart_sweep(forest, ctx, VectorXd::Zero(n), VectorXd::Ones(n), rng);
    if (it >= 100) {
      sum += fit.mean();
      ++kept;
    }
  }
  CHECK(std::abs(sum / kept) < 3 * std::sqrt(cfg.trees * v));
}
