#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace midas {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy. The CLI maps ConfigError/DataError to exit code 2 and
// NumericalError to exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Seeded random stream. One stream per chain or replication; never shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derive an independent stream from a tuple of integers.
  template <class... Ids>
  static Rng derive(std::uint64_t seed, Ids... ids) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(ids)...};
    std::uint64_t s[2];
    seq.generate(reinterpret_cast<std::uint32_t*>(s), reinterpret_cast<std::uint32_t*>(s) + 4);
    return Rng(s[0] ^ (s[1] << 1));
  }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  /// Uniform integer in [0, n).
  Index index(Index n) { return static_cast<Index>(uniform_(engine_) * static_cast<double>(n)) % n; }

  /// Gamma with shape/rate parameterization.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(engine_);
  }
  /// Inverse gamma G^{-1}(shape, scale): 1/x with x ~ G(shape, rate = scale).
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }
  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  VectorXd normal_vector(Index n) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace midas
