#pragma once

#include "midas/common.hpp"

#include <string>
#include <vector>

namespace midas {

/// Coordinate descent for min_b ||y - X b||^2 + rho * ||b||_1 (no intercept).
/// Update: b_j = soft(x_j' r_(j), rho/2) / ||x_j||^2.
VectorXd lasso_coordinate_descent(const MatrixXd& x, const VectorXd& y, double rho, const VectorXd* warm = nullptr,
                                  double tol = 1e-12, int max_sweeps = 100000);

/// Smallest rho with an all-zero solution: max_j 2 |x_j' y|.
double lasso_rho_max(const MatrixXd& x, const VectorXd& y);

/// `count` log-spaced values from rho_max down `decades` decades.
std::vector<double> lasso_grid(double rho_max, int count = 50, double decades = 4);

struct LassoImportance {
  std::vector<double> grid;
  std::vector<double> cv_error;  // mean squared validation error per grid point
  double rho = 0;                // selected
  VectorXd coef;
  double intercept = 0;
  VectorXd group_sum;  // coefficients summed within each group
  bool all_zero = false;
};

/// Lasso surrogate of `target` (e.g. predictive medians) on `x` with contiguous-block
/// K-fold CV over the rho grid. Columns and target are centered on each fitting sample.
/// `column_group[j]` in [0, groups) aggregates coefficients.
LassoImportance lasso_importance(const VectorXd& target, const MatrixXd& x, const std::vector<int>& column_group,
                                 int groups, int folds = 5, int grid_size = 50);

}  // namespace midas
