#pragma once

#include "midas/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace midas {

struct BartConfig {
  int trees = 250;
  double alpha = 0.95;  // node-split base probability a
  double beta = 2.0;    // depth penalty b
  double gamma = 2.0;   // leaf prior scale k
  double p_grow = 0.25;
  double p_merge = 0.25;
  double p_change = 0.40;
  double p_swap = 0.10;

  void validate() const;
  /// Probability that a node at `depth` is nonterminal: a (1 + d)^-b.
  double split_probability(int depth) const;
  /// V_mu = R_y^2 / (4 gamma^2 S).
  double leaf_prior_variance(double target_range) const;
};

/// Candidate split values per variable: midpoints of sorted unique observed values.
struct CutpointGrid {
  std::vector<std::vector<double>> cuts;

  static CutpointGrid from_data(const MatrixXd& x);
  Index variables() const { return static_cast<Index>(cuts.size()); }
  int count(Index var) const { return static_cast<int>(cuts[var].size()); }
  int variables_with_cuts() const;
};

struct TreeNode {
  int var = -1;  // -1 leaf, -2 free slot
  int cut = -1;  // index into the variable's cutpoints
  double mu = 0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;

  bool is_leaf() const { return var == -1; }
  bool is_internal() const { return var >= 0; }
  bool is_free() const { return var == -2; }
};

/// Binary regression tree; a row goes left when x[var] <= cut value.
class RegressionTree {
 public:
  static RegressionTree stump(double mu = 0);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  TreeNode& node(int id) { return nodes_[id]; }
  const TreeNode& node(int id) const { return nodes_[id]; }

  std::vector<int> leaves() const;
  std::vector<int> internal_nodes() const;
  /// Internal nodes whose two children are both leaves.
  std::vector<int> mergeable_nodes() const;
  /// (parent, child) pairs where both are internal.
  std::vector<std::pair<int, int>> swappable_pairs() const;
  int leaf_count() const;

  int find_leaf(const MatrixXd& x, Index row, const CutpointGrid& grid) const;
  double predict(const MatrixXd& x, Index row, const CutpointGrid& grid) const;
  VectorXd predict(const MatrixXd& x, const CutpointGrid& grid) const;

  /// Turn a leaf into an internal node with two fresh leaves. Returns (left, right).
  std::pair<int, int> split(int leaf, int var, int cut);
  /// Turn an internal node whose children are leaves back into a leaf.
  void collapse(int node);

  /// Cutpoint index range [lo, hi) available for `var` at `node` given its ancestors.
  std::pair<int, int> available_range(int node, int var, const CutpointGrid& grid) const;
  /// Number of variables with at least one available cutpoint at `node`.
  int available_variables(int node, const CutpointGrid& grid) const;

  /// Structural canonical string (rules only), used for comparing structures.
  std::string structure_key() const;

 private:
  std::vector<TreeNode> nodes_;
  int alloc();
  void key_rec(int id, std::string& out) const;
};

/// Shared read-only state for tree moves.
struct TreeContext {
  const MatrixXd& x;
  const CutpointGrid& grid;
  const BartConfig& config;
  double leaf_variance;  // V_mu
};

/// log p(T): depth-dependent split probabilities and uniform rule priors.
/// Returns -inf when a rule is unavailable at its node.
double tree_log_prior(const RegressionTree& tree, const TreeContext& ctx);

/// Leaf-marginalized log likelihood (up to tree-independent constants) of
/// residual targets r with per-row precision weights w = 1/sigma^2.
double tree_log_likelihood(const RegressionTree& tree, const TreeContext& ctx, const VectorXd& r, const VectorXd& w);

enum class TreeMove { grow, merge, change, swap };

struct TreeProposal {
  RegressionTree tree;
  TreeMove move;
  double log_q_ratio = 0;  // log q(old | new) - log q(new | old)
};

std::optional<TreeProposal> propose_grow(const RegressionTree& t, const TreeContext& ctx, int leaf, int var, int cut);
std::optional<TreeProposal> propose_merge(const RegressionTree& t, const TreeContext& ctx, int node);
std::optional<TreeProposal> propose_change(const RegressionTree& t, const TreeContext& ctx, int node, int var,
                                           int cut);
std::optional<TreeProposal> propose_swap(const RegressionTree& t, const TreeContext& ctx, int parent, int child);

/// Random proposal of the given move type; nullopt when the move is infeasible.
std::optional<TreeProposal> propose(const RegressionTree& t, const TreeContext& ctx, TreeMove move, Rng& rng);

struct TreeStepResult {
  TreeMove move = TreeMove::grow;
  bool proposed = false;  // false if the move was infeasible
  bool accepted = false;
};

/// One MH update of a tree structure against residual targets.
TreeStepResult tree_mh_step(RegressionTree& tree, const TreeContext& ctx, const VectorXd& residual,
                            const VectorXd& noise, Rng& rng);

/// Draw every leaf value from its conjugate Gaussian posterior.
void sample_leaf_params(RegressionTree& tree, const TreeContext& ctx, const VectorXd& residual, const VectorXd& noise,
                        Rng& rng);

struct Forest {
  std::vector<RegressionTree> trees;
  std::vector<VectorXd> fits;  // per-tree fitted values at training rows
  VectorXd total;

  static Forest stumps(int count, Index rows);
  VectorXd predict(const MatrixXd& x, const CutpointGrid& grid) const;
};

/// One backfitting pass over all trees; returns the summed fit.
const VectorXd& bart_sweep(Forest& forest, const TreeContext& ctx, const VectorXd& y, const VectorXd& noise, Rng& rng);

}  // namespace midas
