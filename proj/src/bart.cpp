#include "midas/bart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace midas {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LeafStats {
  double sw = 0;
  double swr = 0;
};

std::vector<LeafStats> leaf_stats(const RegressionTree& tree, const TreeContext& ctx, const VectorXd& r,
                                  const VectorXd& w) {
  std::vector<LeafStats> s(tree.nodes().size());
  for (Index i = 0; i < r.size(); ++i) {
    const int leaf = tree.find_leaf(ctx.x, i, ctx.grid);
    s[leaf].sw += w(i);
    s[leaf].swr += w(i) * r(i);
  }
  return s;
}

VectorXd precisions(const VectorXd& noise) { return noise.array().max(1e-12).inverse().matrix(); }

// Log probability of drawing rule (var, cut) at `node` from the uniform rule prior.
double log_rule_probability(const RegressionTree& t, const CutpointGrid& grid, int node, int var, int cut) {
  const int nv = t.available_variables(node, grid);
  const auto [lo, hi] = t.available_range(node, var, grid);
  if (nv == 0 || cut < lo || cut >= hi) return kNegInf;
  return -std::log(static_cast<double>(nv)) - std::log(static_cast<double>(hi - lo));
}

std::vector<int> growable_leaves(const RegressionTree& t, const CutpointGrid& grid) {
  std::vector<int> out;
  for (int id : t.leaves())
    if (t.available_variables(id, grid) > 0) out.push_back(id);
  return out;
}

// Uniform draw of a rule at `node`; false if nothing is available.
bool draw_rule(const RegressionTree& t, const CutpointGrid& grid, int node, Rng& rng, int& var, int& cut) {
  std::vector<int> vars;
  for (Index v = 0; v < grid.variables(); ++v) {
    const auto [lo, hi] = t.available_range(node, static_cast<int>(v), grid);
    if (hi > lo) vars.push_back(static_cast<int>(v));
  }
  if (vars.empty()) return false;
  var = vars[rng.index(vars.size())];
  const auto [lo, hi] = t.available_range(node, var, grid);
  cut = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo)));
  return true;
}

}  // namespace

void BartConfig::validate() const {
  if (trees < 1) throw ConfigError("bart: trees must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("bart: alpha must lie in (0, 1)");
  if (!(beta >= 0)) throw ConfigError("bart: beta must be >= 0");
  if (!(gamma > 0)) throw ConfigError("bart: gamma must be > 0");
  const double total = p_grow + p_merge + p_change + p_swap;
  if (p_grow < 0 || p_merge < 0 || p_change < 0 || p_swap < 0 || std::abs(total - 1.0) > 1e-9)
    throw ConfigError("bart: move probabilities must be non-negative and sum to 1");
}

double BartConfig::split_probability(int depth) const { return alpha * std::pow(1.0 + depth, -beta); }

double BartConfig::leaf_prior_variance(double target_range) const {
  return target_range * target_range / (4.0 * gamma * gamma * trees);
}

CutpointGrid CutpointGrid::from_data(const MatrixXd& x) {
  CutpointGrid g;
  g.cuts.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    std::vector<double> v(x.col(j).data(), x.col(j).data() + x.rows());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    auto& c = g.cuts[j];
    c.reserve(v.size() > 0 ? v.size() - 1 : 0);
    for (std::size_t i = 1; i < v.size(); ++i) c.push_back(0.5 * (v[i - 1] + v[i]));
  }
  return g;
}

int CutpointGrid::variables_with_cuts() const {
  int n = 0;
  for (const auto& c : cuts) n += c.empty() ? 0 : 1;
  return n;
}

RegressionTree RegressionTree::stump(double mu) {
  RegressionTree t;
  TreeNode root;
  root.mu = mu;
  t.nodes_.push_back(root);
  return t;
}

int RegressionTree::alloc() {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_free()) {
      nodes_[i] = TreeNode{};
      return static_cast<int>(i);
    }
  nodes_.emplace_back();
  return static_cast<int>(nodes_.size() - 1);
}

std::vector<int> RegressionTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> RegressionTree::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_internal()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> RegressionTree::mergeable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_internal() && nodes_[n.left].is_leaf() && nodes_[n.right].is_leaf()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::pair<int, int>> RegressionTree::swappable_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!n.is_internal()) continue;
    if (nodes_[n.left].is_internal()) out.emplace_back(static_cast<int>(i), n.left);
    if (nodes_[n.right].is_internal()) out.emplace_back(static_cast<int>(i), n.right);
  }
  return out;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int RegressionTree::find_leaf(const MatrixXd& x, Index row, const CutpointGrid& grid) const {
  int id = 0;
  while (nodes_[id].is_internal()) {
    const auto& n = nodes_[id];
    id = x(row, n.var) <= grid.cuts[n.var][n.cut] ? n.left : n.right;
  }
  return id;
}

double RegressionTree::predict(const MatrixXd& x, Index row, const CutpointGrid& grid) const {
  return nodes_[find_leaf(x, row, grid)].mu;
}

VectorXd RegressionTree::predict(const MatrixXd& x, const CutpointGrid& grid) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = predict(x, i, grid);
  return out;
}

std::pair<int, int> RegressionTree::split(int leaf, int var, int cut) {
  if (!nodes_.at(leaf).is_leaf()) throw std::invalid_argument("split: node is not a leaf");
  const int l = alloc();
  const int r = alloc();
  for (int c : {l, r}) {
    nodes_[c].parent = leaf;
    nodes_[c].depth = nodes_[leaf].depth + 1;
  }
  auto& n = nodes_[leaf];
  n.var = var;
  n.cut = cut;
  n.left = l;
  n.right = r;
  n.mu = 0;
  return {l, r};
}

void RegressionTree::collapse(int node) {
  auto& n = nodes_.at(node);
  if (!n.is_internal() || !nodes_[n.left].is_leaf() || !nodes_[n.right].is_leaf())
    throw std::invalid_argument("collapse: node does not have two leaf children");
  nodes_[n.left] = TreeNode{};
  nodes_[n.left].var = -2;
  nodes_[n.right] = TreeNode{};
  nodes_[n.right].var = -2;
  n.var = -1;
  n.cut = -1;
  n.left = n.right = -1;
  n.mu = 0;
}

std::pair<int, int> RegressionTree::available_range(int node, int var, const CutpointGrid& grid) const {
  int lo = 0;
  int hi = grid.count(var);
  int child = node;
  int p = nodes_[node].parent;
  while (p >= 0) {
    const auto& a = nodes_[p];
    if (a.var == var) {
      if (a.left == child)
        hi = std::min(hi, a.cut);
      else
        lo = std::max(lo, a.cut + 1);
    }
    child = p;
    p = a.parent;
  }
  return {lo, std::max(lo, hi)};
}

int RegressionTree::available_variables(int node, const CutpointGrid& grid) const {
  int count = grid.variables_with_cuts();
  std::vector<int> seen;
  for (int p = nodes_[node].parent; p >= 0; p = nodes_[p].parent) {
    const int v = nodes_[p].var;
    if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
    seen.push_back(v);
    const auto [lo, hi] = available_range(node, v, grid);
    if (hi <= lo) --count;
  }
  return count;
}

void RegressionTree::key_rec(int id, std::string& out) const {
  const auto& n = nodes_[id];
  if (n.is_leaf()) {
    out += '.';
    return;
  }
  out += '(' + std::to_string(n.var) + ':' + std::to_string(n.cut) + ' ';
  key_rec(n.left, out);
  out += ' ';
  key_rec(n.right, out);
  out += ')';
}

std::string RegressionTree::structure_key() const {
  std::string s;
  key_rec(0, s);
  return s;
}

double tree_log_prior(const RegressionTree& tree, const TreeContext& ctx) {
  double lp = 0;
  const auto& nodes = tree.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_free()) continue;
    const int id = static_cast<int>(i);
    const double ps = ctx.config.split_probability(n.depth);
    if (n.is_internal()) {
      const double lr = log_rule_probability(tree, ctx.grid, id, n.var, n.cut);
      if (!std::isfinite(lr)) return kNegInf;
      lp += std::log(ps) + lr;
    } else if (tree.available_variables(id, ctx.grid) > 0) {
      lp += std::log1p(-ps);
    }
  }
  return lp;
}

double tree_log_likelihood(const RegressionTree& tree, const TreeContext& ctx, const VectorXd& r, const VectorXd& w) {
  const double v = ctx.leaf_variance;
  double ll = 0;
  for (const auto& s : leaf_stats(tree, ctx, r, w))
    if (s.sw > 0) ll += -0.5 * std::log1p(v * s.sw) + 0.5 * s.swr * s.swr / (s.sw + 1.0 / v);
  return ll;
}

std::optional<TreeProposal> propose_grow(const RegressionTree& t, const TreeContext& ctx, int leaf, int var, int cut) {
  if (leaf < 0 || leaf >= static_cast<int>(t.nodes().size()) || !t.node(leaf).is_leaf()) return std::nullopt;
  const double lr = log_rule_probability(t, ctx.grid, leaf, var, cut);
  if (!std::isfinite(lr)) return std::nullopt;
  const auto growable = growable_leaves(t, ctx.grid);
  TreeProposal p{t, TreeMove::grow, 0};
  p.tree.split(leaf, var, cut);
  const double nmerge = static_cast<double>(p.tree.mergeable_nodes().size());
  const double fwd = std::log(ctx.config.p_grow) - std::log(static_cast<double>(growable.size())) + lr;
  const double rev = std::log(ctx.config.p_merge) - std::log(nmerge);
  p.log_q_ratio = rev - fwd;
  return p;
}

std::optional<TreeProposal> propose_merge(const RegressionTree& t, const TreeContext& ctx, int node) {
  const auto mergeable = t.mergeable_nodes();
  if (std::find(mergeable.begin(), mergeable.end(), node) == mergeable.end()) return std::nullopt;
  const auto& n = t.node(node);
  const double lr = log_rule_probability(t, ctx.grid, node, n.var, n.cut);
  TreeProposal p{t, TreeMove::merge, 0};
  p.tree.collapse(node);
  const double ngrow = static_cast<double>(growable_leaves(p.tree, ctx.grid).size());
  const double fwd = std::log(ctx.config.p_merge) - std::log(static_cast<double>(mergeable.size()));
  const double rev = std::log(ctx.config.p_grow) - std::log(ngrow) + lr;
  p.log_q_ratio = rev - fwd;
  return p;
}

std::optional<TreeProposal> propose_change(const RegressionTree& t, const TreeContext& ctx, int node, int var,
                                           int cut) {
  if (node < 0 || node >= static_cast<int>(t.nodes().size()) || !t.node(node).is_internal()) return std::nullopt;
  const double lr_new = log_rule_probability(t, ctx.grid, node, var, cut);
  if (!std::isfinite(lr_new)) return std::nullopt;
  const double lr_old = log_rule_probability(t, ctx.grid, node, t.node(node).var, t.node(node).cut);
  TreeProposal p{t, TreeMove::change, lr_old - lr_new};
  p.tree.node(node).var = var;
  p.tree.node(node).cut = cut;
  return p;
}

std::optional<TreeProposal> propose_swap(const RegressionTree& t, const TreeContext&, int parent, int child) {
  if (parent < 0 || parent >= static_cast<int>(t.nodes().size())) return std::nullopt;
  const auto& pn = t.node(parent);
  if (!pn.is_internal() || (pn.left != child && pn.right != child) || !t.node(child).is_internal())
    return std::nullopt;
  const int other = pn.left == child ? pn.right : pn.left;
  const auto& cn = t.node(child);
  const auto& on = t.node(other);
  const bool other_internal = on.is_internal();
  const bool twin = other_internal && on.var == cn.var && on.cut == cn.cut;
  // Keep the move an involution: a single swap must not land in the twin case.
  if (!twin && other_internal && on.var == pn.var && on.cut == pn.cut) return std::nullopt;
  TreeProposal p{t, TreeMove::swap, 0};
  auto& np = p.tree.node(parent);
  const int pv = np.var;
  const int pc = np.cut;
  np.var = cn.var;
  np.cut = cn.cut;
  p.tree.node(child).var = pv;
  p.tree.node(child).cut = pc;
  if (twin) {
    p.tree.node(other).var = pv;
    p.tree.node(other).cut = pc;
  }
  return p;
}

std::optional<TreeProposal> propose(const RegressionTree& t, const TreeContext& ctx, TreeMove move, Rng& rng) {
  switch (move) {
    case TreeMove::grow: {
      const auto growable = growable_leaves(t, ctx.grid);
      if (growable.empty()) return std::nullopt;
      const int leaf = growable[rng.index(growable.size())];
      int var = 0, cut = 0;
      if (!draw_rule(t, ctx.grid, leaf, rng, var, cut)) return std::nullopt;
      return propose_grow(t, ctx, leaf, var, cut);
    }
    case TreeMove::merge: {
      const auto m = t.mergeable_nodes();
      if (m.empty()) return std::nullopt;
      return propose_merge(t, ctx, m[rng.index(m.size())]);
    }
    case TreeMove::change: {
      const auto internal = t.internal_nodes();
      if (internal.empty()) return std::nullopt;
      const int node = internal[rng.index(internal.size())];
      int var = 0, cut = 0;
      if (!draw_rule(t, ctx.grid, node, rng, var, cut)) return std::nullopt;
      return propose_change(t, ctx, node, var, cut);
    }
    case TreeMove::swap: {
      const auto pairs = t.swappable_pairs();
      if (pairs.empty()) return std::nullopt;
      const auto [parent, child] = pairs[rng.index(pairs.size())];
      return propose_swap(t, ctx, parent, child);
    }
  }
  return std::nullopt;
}

TreeStepResult tree_mh_step(RegressionTree& tree, const TreeContext& ctx, const VectorXd& residual,
                            const VectorXd& noise, Rng& rng) {
  const auto& c = ctx.config;
  const double u = rng.uniform();
  TreeStepResult res;
  if (u < c.p_grow)
    res.move = TreeMove::grow;
  else if (u < c.p_grow + c.p_merge)
    res.move = TreeMove::merge;
  else if (u < c.p_grow + c.p_merge + c.p_change)
    res.move = TreeMove::change;
  else
    res.move = TreeMove::swap;

  auto prop = propose(tree, ctx, res.move, rng);
  const double ua = rng.uniform();
  if (!prop) return res;
  res.proposed = true;
  const double lp_new = tree_log_prior(prop->tree, ctx);
  if (!std::isfinite(lp_new)) return res;
  const VectorXd w = precisions(noise);
  const double log_alpha = tree_log_likelihood(prop->tree, ctx, residual, w) -
                           tree_log_likelihood(tree, ctx, residual, w) + lp_new - tree_log_prior(tree, ctx) +
                           prop->log_q_ratio;
  if (std::log(ua) < log_alpha) {
    tree = std::move(prop->tree);
    res.accepted = true;
  }
  return res;
}

void sample_leaf_params(RegressionTree& tree, const TreeContext& ctx, const VectorXd& residual, const VectorXd& noise,
                        Rng& rng) {
  const auto stats = leaf_stats(tree, ctx, residual, precisions(noise));
  const double inv_v = 1.0 / ctx.leaf_variance;
  for (int id : tree.leaves()) {
    const double prec = stats[id].sw + inv_v;
    tree.node(id).mu = stats[id].swr / prec + rng.normal() / std::sqrt(prec);
  }
}

Forest Forest::stumps(int count, Index rows) {
  Forest f;
  f.trees.assign(count, RegressionTree::stump());
  f.fits.assign(count, VectorXd::Zero(rows));
  f.total = VectorXd::Zero(rows);
  return f;
}

VectorXd Forest::predict(const MatrixXd& x, const CutpointGrid& grid) const {
  VectorXd out = VectorXd::Zero(x.rows());
  for (const auto& t : trees) out += t.predict(x, grid);
  return out;
}

const VectorXd& bart_sweep(Forest& forest, const TreeContext& ctx, const VectorXd& y, const VectorXd& noise,
                           Rng& rng) {
  VectorXd r(y.size());
  for (std::size_t s = 0; s < forest.trees.size(); ++s) {
    r = y - forest.total + forest.fits[s];
    tree_mh_step(forest.trees[s], ctx, r, noise, rng);
    sample_leaf_params(forest.trees[s], ctx, r, noise, rng);
    VectorXd fit = forest.trees[s].predict(ctx.x, ctx.grid);
    forest.total += fit - forest.fits[s];
    forest.fits[s] = std::move(fit);
  }
  forest.total.setZero();
  for (const auto& f : forest.fits) forest.total += f;
  return forest.total;
}

}  // namespace midas
