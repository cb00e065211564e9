#pragma once

#include "midas/common.hpp"

#include <array>

namespace midas {

/// Cholesky factor of a symmetric matrix with a diagonal jitter ladder.
/// Tries 0, 1e-10, 1e-9, ..., 1e-6 and records the jitter that succeeded.
template <class Scalar>
struct JitteredCholesky {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Eigen::LLT<Matrix> llt;
  Scalar jitter = 0;

  explicit JitteredCholesky(const Matrix& a) {
    static constexpr std::array<double, 6> ladder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    for (double j : ladder) {
      jitter = static_cast<Scalar>(j);
      if (j == 0.0) {
        llt.compute(a);
      } else {
        Matrix b = a;
        b.diagonal().array() += jitter;
        llt.compute(b);
      }
      if (llt.info() == Eigen::Success) return;
    }
    throw NumericalError("cholesky failed after maximum jitter 1e-6");
  }

  auto matrix_l() const { return llt.matrixL(); }

  Scalar log_det() const {
    return 2 * llt.matrixLLT().diagonal().array().log().sum();
  }
};

}  // namespace midas
