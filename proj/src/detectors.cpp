#include "nougat/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nougat/errors.hpp"

namespace nougat {

void NougatConfig::validate() const {
  if (!(mu > 0.0)) throw ValidationError("nougat: step size mu must be > 0");
  if (nu < 0.0) throw ValidationError("nougat: regularization nu must be >= 0");
}

NougatDetector::NougatDetector(NougatConfig cfg, int dim, const Eigen::VectorXd& theta0)
    : cfg_(cfg) {
  cfg_.validate();
  if (theta0.size() == 0) {
    theta_ = Eigen::VectorXd::Zero(dim);
  } else {
    if (theta0.size() != dim) throw ValidationError("nougat: theta0 length != dictionary size");
    theta_ = theta0;
  }
}

void NougatDetector::notify_growth() {
  theta_.conservativeResize(theta_.size() + 1);
  theta_[theta_.size() - 1] = 0.0;
}

void NougatDetector::step(const WindowStats& stats) {
  const Eigen::MatrixXd& big_h = stats.H_ref();
  if (big_h.rows() != theta_.size()) {
    throw ValidationError("nougat: weight/statistics dimension mismatch");
  }
  theta_ -= cfg_.mu * (big_h * theta_ + cfg_.nu * theta_ + stats.e_opt());
  g_ = theta_.dot(stats.h_test());
}

double NougatDetector::alarm_statistic() const {
  return cfg_.rule == AlarmRule::shifted ? std::abs(g_ + 1.0) : std::abs(g_);
}

Eigen::VectorXd drulsif_solve(const Eigen::MatrixXd& H_ref, const Eigen::VectorXd& e_opt,
                              double nu, double residual_tol) {
  if (H_ref.rows() != H_ref.cols() || H_ref.rows() != e_opt.size()) {
    throw ValidationError("drulsif: H/e dimension mismatch");
  }
  if (nu < 0.0) throw ValidationError("drulsif: nu must be >= 0");
  Eigen::MatrixXd a = H_ref;
  a.diagonal().array() += nu;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("drulsif: factorization of H_ref + nu I failed");
  }
  Eigen::VectorXd theta = ldlt.solve(-e_opt);
  // One refinement step; rechecks the gradient-norm contract afterwards.
  Eigen::VectorXd r = -e_opt - a * theta;
  theta += ldlt.solve(r);
  const double residual = (a * theta + e_opt).norm();
  if (!(residual <= residual_tol) || !theta.allFinite()) {
    throw NumericalError("drulsif: singular or ill-conditioned system (nu=" +
                         std::to_string(nu) + ", residual=" + std::to_string(residual) + ")");
  }
  return theta;
}

Eigen::VectorXd drulsif_solve(const WindowStats& stats, double nu, double residual_tol) {
  return drulsif_solve(stats.H_ref(), stats.e_opt(), nu, residual_tol);
}

double ma_statistic(const WindowStats& stats) { return stats.e_opt().norm(); }

void GmaConfig::validate() const {
  if (!(alpha > 0.0) || alpha > 1.0) throw ValidationError("gma: alpha must be in (0, 1]");
}

GmaDetector::GmaDetector(GmaConfig cfg, int dim) : cfg_(cfg) {
  cfg_.validate();
  vartheta_ = Eigen::VectorXd::Zero(dim);
}

void GmaDetector::notify_growth() {
  vartheta_.conservativeResize(vartheta_.size() + 1);
  vartheta_[vartheta_.size() - 1] = 0.0;
  if (nominal_) {
    nominal_->conservativeResize(nominal_->size() + 1);
    (*nominal_)[nominal_->size() - 1] = 0.0;
  }
}

void GmaDetector::step(const Eigen::VectorXd& y, const Dictionary& dict) {
  if (dict.size() != vartheta_.size()) {
    throw ValidationError("gma: state/dictionary dimension mismatch");
  }
  vartheta_ = (1.0 - cfg_.alpha) * vartheta_ + cfg_.alpha * dict.kvec(y);
}

std::optional<double> GmaDetector::statistic() const {
  if (!nominal_) return std::nullopt;
  return (vartheta_ - *nominal_).norm();
}

std::vector<std::vector<int>> knn_neighbors(const std::vector<Eigen::VectorXd>& pooled,
                                            int k_neighbors) {
  const int n = static_cast<int>(pooled.size());
  if (k_neighbors < 1) throw ValidationError("knn: k_neighbors must be >= 1");
  if (n < k_neighbors + 1) {
    throw ValidationError("knn: pooled sample count must exceed k_neighbors");
  }
  std::vector<std::vector<int>> nb(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((pooled[i] - pooled[j]).squaredNorm(), j);
    }
    // (distance, index) ordering implements smaller-index tie-breaking.
    std::partial_sort(cand.begin(), cand.begin() + k_neighbors, cand.end());
    nb[i].reserve(k_neighbors);
    for (int m = 0; m < k_neighbors; ++m) nb[i].push_back(cand[m].second);
  }
  return nb;
}

double knn_expected_cross_edges(int n_ref, int n_test, int k_neighbors) {
  return 2.0 * k_neighbors * static_cast<double>(n_ref) * static_cast<double>(n_test) /
         static_cast<double>(n_ref + n_test - 1);
}

double knn_statistic(const std::vector<Eigen::VectorXd>& pooled, int n_ref, int n_test,
                     const KnnConfig& cfg) {
  if (n_ref < 1 || n_test < 1 || static_cast<int>(pooled.size()) != n_ref + n_test) {
    throw ValidationError("knn: pooled window must hold n_ref + n_test samples");
  }
  const auto nb = knn_neighbors(pooled, cfg.k_neighbors);
  long cross = 0;
  for (int i = 0; i < static_cast<int>(nb.size()); ++i) {
    const bool i_ref = i < n_ref;
    for (int j : nb[i]) cross += (i_ref != (j < n_ref)) ? 1 : 0;
  }
  return static_cast<double>(cross) -
         knn_expected_cross_edges(n_ref, n_test, cfg.k_neighbors);
}

}  // namespace nougat
