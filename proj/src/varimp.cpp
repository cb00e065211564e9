#include "midas/varimp.hpp"

#include <algorithm>
#include <cmath>

namespace midas {

namespace {

double soft(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

struct Centered {
  MatrixXd x;
  VectorXd y;
  Eigen::RowVectorXd x_mean;
  double y_mean;
};

Centered center(const MatrixXd& x, const VectorXd& y) {
  Centered c;
  c.x_mean = x.colwise().mean();
  c.y_mean = y.mean();
  c.x = x.rowwise() - c.x_mean;
  c.y = y.array() - c.y_mean;
  return c;
}

}  // namespace

VectorXd lasso_coordinate_descent(const MatrixXd& x, const VectorXd& y, double rho, const VectorXd* warm, double tol,
                                  int max_sweeps) {
  if (x.rows() != y.size()) throw std::invalid_argument("lasso: dimension mismatch");
  if (!(rho >= 0)) throw ConfigError("lasso penalty must be nonnegative");
  const Index p = x.cols();
  VectorXd b = warm ? *warm : VectorXd::Zero(p);
  const VectorXd norms = x.colwise().squaredNorm().transpose();
  VectorXd r = y - x * b;
  const double scale = std::max(1.0, y.squaredNorm());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0;
    for (Index j = 0; j < p; ++j) {
      if (norms(j) == 0) {
        b(j) = 0;
        continue;
      }
      const double old = b(j);
      const double z = x.col(j).dot(r) + norms(j) * old;
      const double next = soft(z, 0.5 * rho) / norms(j);
      if (next != old) {
        r -= (next - old) * x.col(j);
        b(j) = next;
        max_change = std::max(max_change, (next - old) * (next - old) * norms(j));
      }
    }
    if (max_change <= tol * scale) break;
  }
  return b;
}

double lasso_rho_max(const MatrixXd& x, const VectorXd& y) {
  return x.cols() == 0 ? 0.0 : 2.0 * (x.transpose() * y).cwiseAbs().maxCoeff();
}

std::vector<double> lasso_grid(double rho_max, int count, double decades) {
  if (count < 1) throw ConfigError("lasso grid needs at least one point");
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g[i] = rho_max * std::pow(10.0, -decades * frac);
  }
  return g;
}

LassoImportance lasso_importance(const VectorXd& target, const MatrixXd& x, const std::vector<int>& column_group,
                                 int groups, int folds, int grid_size) {
  const Index n = x.rows();
  if (target.size() != n) throw DataError("importance: target and design differ in length");
  if (n < 20) throw DataError("importance: at least 20 holdout periods are required");
  if (static_cast<Index>(column_group.size()) != x.cols()) throw DataError("importance: one group per column");
  if (folds < 2 || folds > n) throw ConfigError("importance: folds must lie in [2, n]");
  if (!target.allFinite() || !x.allFinite()) throw DataError("importance: non-finite inputs");

  LassoImportance out;
  const Centered full = center(x, target);
  out.grid = lasso_grid(lasso_rho_max(full.x, full.y), grid_size);
  out.cv_error.assign(out.grid.size(), 0.0);

  for (int k = 0; k < folds; ++k) {
    const Index lo = n * k / folds;
    const Index hi = n * (k + 1) / folds;
    const Index nt = n - (hi - lo);
    MatrixXd xt(nt, x.cols());
    VectorXd yt(nt);
    xt << x.topRows(lo), x.bottomRows(n - hi);
    yt << target.head(lo), target.tail(n - hi);
    const Centered c = center(xt, yt);
    const MatrixXd xv = x.middleRows(lo, hi - lo).rowwise() - c.x_mean;
    const VectorXd yv = target.segment(lo, hi - lo).array() - c.y_mean;
    VectorXd b = VectorXd::Zero(x.cols());
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      b = lasso_coordinate_descent(c.x, c.y, out.grid[g], &b, 1e-10);
      out.cv_error[g] += (yv - xv * b).squaredNorm() / static_cast<double>(n);
    }
  }

  const auto best = std::min_element(out.cv_error.begin(), out.cv_error.end()) - out.cv_error.begin();
  out.rho = out.grid[best];
  VectorXd b = VectorXd::Zero(x.cols());
  for (Index g = 0; g <= best; ++g) b = lasso_coordinate_descent(full.x, full.y, out.grid[g], &b);
  out.coef = b;
  out.intercept = full.y_mean - full.x_mean.dot(b);
  out.group_sum = VectorXd::Zero(groups);
  for (Index j = 0; j < x.cols(); ++j) {
    if (column_group[j] < 0 || column_group[j] >= groups) throw DataError("importance: group index out of range");
    out.group_sum(column_group[j]) += b(j);
  }
  out.all_zero = b.isZero(0);
  return out;
}

}  // namespace midas
