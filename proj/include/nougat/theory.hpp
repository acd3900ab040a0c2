#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "nougat/gaussian_moments.hpp"

namespace nougat {

// Algorithm parameters for the analytical models (pre-tuned dictionary of
// size L implied by the moment set).
struct AlgoConfig {
  double mu = 1e-3;
  double nu = 0.0;
  int n_ref = 1;
  int n_test = 1;
  Eigen::VectorXd theta0;  // empty = zero vector

  void validate() const;
};

// Single change at update index t0: the sample consumed at step t0 is the
// first draw from the post-change distribution.
struct ChangeScenario {
  long t0 = 0;
  MomentSet pre;   // moments under p0
  MomentSet post;  // moments under p1
};

ChangeScenario null_scenario(const MomentSet& moments);  // t0 pushed past any horizon

enum class Regime { pre, test_mixed, ref_mixed, post };

// Distribution composition of both windows at update index t:
// n0 + n1 = N_test (test window), n0p + n1p = N_ref (reference window),
// where the 1-counts are post-change samples.
struct RegimeSchedule {
  Regime regime;
  int n0 = 0, n1 = 0;
  int n0p = 0, n1p = 0;
};

RegimeSchedule regime_schedule(long t, long t0, int n_ref, int n_test);

// Mean-stability step-size bound 2 / max_eig(H + nu I).
double step_bound(const Eigen::MatrixXd& H, double nu);

// Column-major vec / unvec and the Kronecker product, fixed conventions
// shared by every recursion here.
Eigen::VectorXd vec(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows);
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct TheoryOptions {
  // Drop the mean path entirely (m, Z and N set to zero; variance reads
  // tr(H C)/N_test). Matches the simplified null-hypothesis recursion.
  bool neglect_mean = false;
  bool store_mean = true;
  bool store_covariance = false;
};

// Time-indexed model outputs for t = 1..horizon (index 0 <-> t = 1).
struct TheoryTrace {
  Eigen::VectorXd mean_g;
  Eigen::VectorXd var_g;
  Eigen::MatrixXd m_theta;                 // horizon x L when stored
  std::vector<Eigen::MatrixXd> c_theta;    // per-step E{theta theta^T} when stored
  Eigen::VectorXd m_final;
  Eigen::MatrixXd c_final;

  void save_csv(std::ostream& os, bool with_mean_vector = false) const;
  void save_csv_file(const std::string& path, bool with_mean_vector = false) const;
};

// Coupled mean/correlation recursions with regime-dependent moment mixing;
// the null wrappers below are thin specializations.
TheoryTrace theory_trace(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon,
                         const TheoryOptions& opts = {});

TheoryTrace mean_null(const AlgoConfig& cfg, const MomentSet& moments, long horizon);
TheoryTrace variance_null(const AlgoConfig& cfg, const MomentSet& moments, long horizon,
                          const TheoryOptions& opts = {});
TheoryTrace mean_change(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon);
TheoryTrace variance_change(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon,
                            const TheoryOptions& opts = {});

// Null-hypothesis noise-injection matrix (N_ref+N_test)/(N_ref N_test) (H - h h^T).
Eigen::MatrixXd null_Q(const AlgoConfig& cfg, const MomentSet& moments);

// Explicit L^2 x L^2 transition matrix of the vectorized correlation
// recursion under the null (m neglected).
Eigen::MatrixXd null_S_matrix(const AlgoConfig& cfg, const MomentSet& moments);

struct SteadyState {
  Eigen::VectorXd c_inf;   // vectorized limit of E{theta theta^T}
  double var_inf = 0.0;
  double spectral_radius = 0.0;
};

// Closed-form fixed point c = mu^2 (I - S)^{-1} vec(Q); throws
// NumericalError when the recursion is mean-square unstable (rho(S) >= 1).
SteadyState steady_state_null(const AlgoConfig& cfg, const MomentSet& moments);

// Runs the vectorized null recursion for 2^log2_steps steps from C_0 = 0
// by affine-map doubling (exact same linear map, evaluated in O(log steps)).
Eigen::VectorXd iterate_null_covariance(const AlgoConfig& cfg, const MomentSet& moments,
                                        int log2_steps);

// Small-step asymptotic variance (mu/N_test) tr(H X) with
// (nu I + H) X + X (nu I + H) = Q, solved by symmetric eigendecomposition.
double smallmu_variance(const AlgoConfig& cfg, const MomentSet& moments);
// Same value through the Kronecker form
// (mu/N_test) vec(H)^T (2 nu I + H (+) H)^{-1} vec(Q).
double smallmu_variance_kron(const AlgoConfig& cfg, const MomentSet& moments);

}  // namespace nougat
