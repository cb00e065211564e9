#include "midas/varimp.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>

using namespace midas;

namespace {

MatrixXd random_matrix(Index r, Index c, Rng& rng) {
  MatrixXd x(r, c);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

double soft(double z, double g) { return z > g ? z - g : (z < -g ? z + g : 0.0); }

}  // namespace

TEST_CASE("rho = 0 reproduces least squares") {
  Rng rng(1);
  const MatrixXd x = random_matrix(60, 5, rng);
  const VectorXd y = rng.normal_vector(60);
  const VectorXd ols = x.colPivHouseholderQr().solve(y);
  CHECK((lasso_coordinate_descent(x, y, 0.0, nullptr, 1e-24) - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rho above rho_max gives the zero vector") {
  Rng rng(2);
  const MatrixXd x = random_matrix(40, 6, rng);
  const VectorXd y = rng.normal_vector(40);
  const double rmax = lasso_rho_max(x, y);
  CHECK(rmax == doctest::Approx(2 * (x.transpose() * y).cwiseAbs().maxCoeff()));
  CHECK(lasso_coordinate_descent(x, y, rmax * 1.0001).isZero(0));
  CHECK_FALSE(lasso_coordinate_descent(x, y, rmax * 0.9).isZero(0));
}

TEST_CASE("orthonormal design gives the soft-threshold closed form") {
  Rng rng(3);
  const MatrixXd q = random_matrix(30, 4, rng).householderQr().householderQ() * MatrixXd::Identity(30, 4);
  const VectorXd y = 2 * rng.normal_vector(30);
  const double rho = 1.3;
  const VectorXd b = lasso_coordinate_descent(q, y, rho);
  const VectorXd z = q.transpose() * y;
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(b(j) - soft(z(j), rho / 2)) < 1e-10);
}

TEST_CASE("solution satisfies the KKT conditions") {
  Rng rng(4);
  const MatrixXd x = random_matrix(50, 8, rng);
  VectorXd beta = VectorXd::Zero(8);
  beta(1) = 2;
  beta(5) = -1;
  const VectorXd y = x * beta + rng.normal_vector(50);
  const double rho = 0.2 * lasso_rho_max(x, y);
  const VectorXd b = lasso_coordinate_descent(x, y, rho);
  // gradient of the smooth part: -2 x_j'(y - X b)
  const VectorXd g = 2 * x.transpose() * (y - x * b);
  const double tol = 1e-6 * rho;
  for (Index j = 0; j < 8; ++j) {
    if (b(j) != 0)
      CHECK(std::abs(g(j) - rho * (b(j) > 0 ? 1 : -1)) < tol);
    else
      CHECK(std::abs(g(j)) <= rho + tol);
  }
  // warm start converges to the same point
  const VectorXd w = VectorXd::Constant(8, 0.5);
  CHECK((lasso_coordinate_descent(x, y, rho, &w) - b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("log-spaced grid") {
  const auto g = lasso_grid(10.0, 5, 4);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == doctest::Approx(10.0));
  CHECK(g.back() == doctest::Approx(1e-3));
  CHECK(g[1] / g[0] == doctest::Approx(0.1));
}

TEST_CASE("importance recovers the active group and is deterministic") {
  Rng rng(5);
  const Index n = 120;
  const MatrixXd x = random_matrix(n, 6, rng);
  const std::vector<int> group{0, 0, 1, 1, 2, 2};
  const VectorXd target = VectorXd::Constant(n, 3.0) + 1.5 * x.col(2) - 1.0 * x.col(3) + 0.1 * rng.normal_vector(n);
  const auto a = lasso_importance(target, x, group, 3);
  const auto b = lasso_importance(target, x, group, 3);
  CHECK(a.coef == b.coef);
  CHECK(a.rho == b.rho);
  CHECK(a.grid.size() == 50);
  CHECK(a.cv_error.size() == 50);
  CHECK_FALSE(a.all_zero);
  CHECK(a.group_sum.size() == 3);
  CHECK(std::abs(a.group_sum(1)) > 10 * std::abs(a.group_sum(0)));
  CHECK(std::abs(a.group_sum(1)) > 10 * std::abs(a.group_sum(2)));
  CHECK(a.coef(2) == doctest::Approx(1.5).epsilon(0.05));
  CHECK(a.intercept == doctest::Approx(3.0).epsilon(0.05));

  // pure noise target: heavy shrinkage
  const auto z = lasso_importance(rng.normal_vector(n) * 0.01, x, group, 3);
  CHECK(z.coef.cwiseAbs().maxCoeff() < 0.01);
  CHECK_THROWS_AS(lasso_importance(target.head(10), x.topRows(10), group, 3), DataError);
}
