#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nougat/kernel.hpp"
#include "nougat/windows.hpp"

namespace nougat {

// Alarm rule applied to the density-ratio statistic g (which estimates
// r(y) - 1 and is 0 under the null). `shifted` is the published rule
// |g + 1| > xi; `centered` is the two-sided alternative |g| > xi.
enum class AlarmRule { shifted, centered };

struct NougatConfig {
  double mu = 1e-3;     // gradient step size, > 0
  double nu = 0.0;      // ridge regularization, >= 0
  double xi = 1.5;      // detection threshold
  AlarmRule rule = AlarmRule::shifted;

  void validate() const;
};

// Online density-ratio detector: one gradient step per sample on the
// windowed quadratic cost,
//   theta <- theta - mu [ (H_ref + nu I) theta + e_opt ],
// statistic g = theta^T h_test.
class NougatDetector {
 public:
  NougatDetector(NougatConfig cfg, int dim, const Eigen::VectorXd& theta0 = Eigen::VectorXd());

  // Append a zero weight after the dictionary gained an atom.
  void notify_growth();

  // One update against warm window statistics.
  void step(const WindowStats& stats);

  const Eigen::VectorXd& theta() const { return theta_; }
  double statistic() const { return g_; }
  // Thresholded magnitude: |g+1| (shifted) or |g| (centered).
  double alarm_statistic() const;
  bool alarm() const { return alarm_statistic() > cfg_.xi; }
  const NougatConfig& config() const { return cfg_; }

 private:
  NougatConfig cfg_;
  Eigen::VectorXd theta_;
  double g_ = 0.0;
};

// Exact minimizer of the windowed quadratic cost: solves
// (H_ref + nu I) theta = -e_opt by LDLT with one step of iterative
// refinement; throws NumericalError when the residual cannot be driven
// below `residual_tol` (singular system).
Eigen::VectorXd drulsif_solve(const Eigen::MatrixXd& H_ref, const Eigen::VectorXd& e_opt,
                              double nu, double residual_tol = 1e-10);
Eigen::VectorXd drulsif_solve(const WindowStats& stats, double nu, double residual_tol = 1e-10);

// Feature-space moving-average statistic ||h_test - h_ref||_2.
double ma_statistic(const WindowStats& stats);

struct GmaConfig {
  double alpha = 0.05;  // forgetting factor in (0, 1]
  void validate() const;
};

// Geometric moving average of the feature map. The deviation statistic
// needs the nominal feature mean; without one only the state is tracked.
class GmaDetector {
 public:
  GmaDetector(GmaConfig cfg, int dim);

  void set_nominal(const Eigen::VectorXd& nominal) { nominal_ = nominal; }
  void notify_growth();
  void step(const Eigen::VectorXd& y, const Dictionary& dict);

  const Eigen::VectorXd& state() const { return vartheta_; }
  std::optional<double> statistic() const;

 private:
  GmaConfig cfg_;
  Eigen::VectorXd vartheta_;
  std::optional<Eigen::VectorXd> nominal_;
};

struct KnnConfig {
  int k_neighbors = 10;
};

// Two-sample statistic on the pooled window (first n_ref samples form the
// reference block, the remaining n_test the test block): counts directed
// k-NN edges crossing the blocks and subtracts the expected count under
// exchangeability, E{N_e} = k * 2 n_ref n_test / (n_ref + n_test - 1).
// Distance ties break toward the smaller index; no self-neighbors.
// Negative values mean fewer cross edges than chance (clustered windows).
double knn_statistic(const std::vector<Eigen::VectorXd>& pooled, int n_ref, int n_test,
                     const KnnConfig& cfg);

// Directed k-NN adjacency for the pooled samples (row = source, entries =
// neighbor indices). Exposed for permutation-based validation.
std::vector<std::vector<int>> knn_neighbors(const std::vector<Eigen::VectorXd>& pooled,
                                            int k_neighbors);

// Expected cross-edge count under the equal-distribution hypothesis.
double knn_expected_cross_edges(int n_ref, int n_test, int k_neighbors);

}  // namespace nougat
