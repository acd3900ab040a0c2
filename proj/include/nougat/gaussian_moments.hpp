#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "nougat/kernel.hpp"
#include "nougat/rng.hpp"

namespace nougat {

// Data-generating Gaussian N(mu, R); R symmetric positive semidefinite.
struct GaussianSpec {
  Eigen::VectorXd mu;
  Eigen::MatrixXd R;

  void validate() const;

  // Zero-mean equicorrelated spec: all variances std^2, all correlations corr.
  static GaussianSpec equicorrelated(int dim, double std_dev, double corr);
};

// Moment generating function of a Gaussian quadratic form:
//   psi(s, W, b) = E{ exp(s (y^T W y + b^T y)) },  y ~ N(mu, R)
// evaluated as
//   |I - 2 s W R|^(-1/2) exp(s [ (mu^T W mu + b^T mu)
//                                + (s/2) v^T R (I - 2 s W R)^(-1) v ])
// with v = 2 W mu + b. Requires I - 2 s W R nonsingular with positive
// determinant (always true for s <= 0, W, R PSD).
double psi(double s, const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const GaussianSpec& spec);

// First- through fourth-order moments of the feature vector k(y) under the
// spec, all entries exact for the Gaussian kernel:
//   h     = E{k(y)}                       (L)
//   H     = E{k(y) k(y)^T}                (L x L)
//   Gamma = E{k k^T (x) k k^T}            (L^2 x L^2, Kronecker blocks)
//   Delta = E{k k^T (x) k}                (L^2 x L)
Eigen::VectorXd moment_h(const Dictionary& dict, const GaussianSpec& spec);
Eigen::MatrixXd moment_H(const Dictionary& dict, const GaussianSpec& spec);
Eigen::MatrixXd moment_Gamma(const Dictionary& dict, const GaussianSpec& spec);
Eigen::MatrixXd moment_Delta(const Dictionary& dict, const GaussianSpec& spec);

struct MomentSet {
  Eigen::VectorXd h;
  Eigen::MatrixXd H;
  Eigen::MatrixXd Gamma;
  Eigen::MatrixXd Delta;

  void save_csv(std::ostream& os) const;
  void save_csv_file(const std::string& path) const;
  static MomentSet load_csv(std::istream& is);
  static MomentSet load_csv_file(const std::string& path);
};

// Closed-form moment set; Gamma/Delta entries are memoized on the sorted
// atom-index multiset (they depend on the atoms only through their sum).
MomentSet closed_form_moments(const Dictionary& dict, const GaussianSpec& spec);

// Monte Carlo moment set for data without a closed form: averages the
// feature moments over n_samples draws from `draw`.
MomentSet mc_moments(const Dictionary& dict,
                     const std::function<Eigen::VectorXd(Rng&)>& draw, long n_samples,
                     std::uint64_t seed);
MomentSet mc_moments(const Dictionary& dict, const GaussianSpec& spec, long n_samples,
                     std::uint64_t seed);

}  // namespace nougat
