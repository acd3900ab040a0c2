#include "nougat/rng.hpp"

#include <cmath>

#include "nougat/errors.hpp"

namespace nougat {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base + 0x9E3779B97F4A7C15ULL * (index + 1));
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  // Rejection to kill modulo bias.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) throw ValidationError("gamma shape must be positive");
  if (shape < 1.0) {
    // Boost: X ~ Gamma(shape+1), U^(1/shape) scaling.
    const double u = uniform_open();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd Rng::dirichlet(double concentration, Eigen::Index n) {
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = gamma(concentration);
  const double s = w.sum();
  if (s <= 0.0) throw NumericalError("degenerate Dirichlet draw");
  return w / s;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& R, double tol) {
  if (R.rows() != R.cols()) throw ValidationError("covariance must be square");
  if (R.size() == 0) return R;
  if (!R.isApprox(R.transpose(), 1e-12)) throw ValidationError("covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol * scale) throw NumericalError("covariance is not positive semidefinite");
    root[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sqrt_cov, Rng& rng) {
  return mu + sqrt_cov * rng.normal_vector(sqrt_cov.cols());
}

Eigen::MatrixXd wishart_identity(Eigen::Index k, double dof, Rng& rng) {
  if (dof <= static_cast<double>(k) - 1.0) {
    throw ValidationError("Wishart dof must exceed dim - 1");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose();
}

}  // namespace nougat
