#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace nougat {

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

// Per-run seed for run `index` under `base`. Injective in `index` for a
// fixed base: base + GOLDEN*(index+1) is injective mod 2^64 (GOLDEN odd)
// and splitmix64 is a bijection.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// mt19937_64 core with self-contained distribution transforms, so streams
// are reproducible independent of the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1), safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t uniform_below(std::uint64_t n);  // uniform on {0, ..., n-1}

  double normal();                               // standard normal (Box-Muller, cached pair)
  double gamma(double shape);                    // Gamma(shape, 1), Marsaglia-Tsang
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::VectorXd dirichlet(double concentration, Eigen::Index n);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Factor of a symmetric PSD matrix R such that A*A^T = R, via symmetric
// eigendecomposition (tolerates rank deficiency, e.g. R = 0).
// Eigenvalues below -tol * max|eig| raise NumericalError.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& R, double tol = 1e-10);

// One draw from N(mu, A*A^T) where A = psd_sqrt(R).
Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sqrt_cov, Rng& rng);

// Wishart(scale = I, dof) draw in dimension k via Bartlett decomposition.
Eigen::MatrixXd wishart_identity(Eigen::Index k, double dof, Rng& rng);

}  // namespace nougat
