#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nougat/kernel.hpp"

namespace nougat {

struct WindowConfig {
  int n_ref = 1;   // reference window length
  int n_test = 1;  // test window length
};

// Ring-buffered reference/test windows with recursively maintained window
// statistics:
//   h_test = mean of kvec over the test window
//   h_ref  = mean of kvec over the reference window
//   H_ref  = mean of kvec*kvec^T over the reference window
//   e_opt  = h_ref - h_test
// Per push the update is O(L^2): one rank-one term enters H_ref (the sample
// migrating from test to reference) and one leaves (the sample leaving the
// reference window). Raw samples are buffered as well so the statistics can
// be re-derived when the dictionary grows mid-stream.
//
// Statistics are published only once the buffer is full ("warm"); every
// 10*(n_ref+n_test) pushes they are recomputed from scratch to bound
// floating-point drift.
class WindowStats {
 public:
  WindowStats(WindowConfig cfg, const Dictionary& dict);

  void push(const Eigen::VectorXd& y, const Dictionary& dict);

  // Call right after the dictionary grew by one atom: buffered feature
  // vectors gain the new component and the statistics are rebuilt against
  // the extended dictionary.
  void extend_dimension(const Dictionary& dict);

  bool warm() const { return fill_ == capacity_; }
  int fill() const { return fill_; }
  int capacity() const { return capacity_; }
  const WindowConfig& config() const { return cfg_; }
  int feature_dim() const { return static_cast<int>(feats_.rows()); }

  const Eigen::VectorXd& h_test() const;
  const Eigen::VectorXd& h_ref() const;
  const Eigen::MatrixXd& H_ref() const;
  const Eigen::VectorXd& e_opt() const;

  // Buffered raw samples ordered oldest -> newest (reference window first,
  // then test window); size == fill().
  std::vector<Eigen::VectorXd> ordered_samples() const;

  // From-scratch recomputation of all maintained statistics.
  void rebuild();

 private:
  void require_warm() const;
  int slot(int ordered_index) const { return (head_ + ordered_index) % capacity_; }

  WindowConfig cfg_;
  int capacity_;
  int fill_ = 0;
  int head_ = 0;  // slot of the oldest sample == next write position when full
  long pushes_since_rebuild_ = 0;

  Eigen::MatrixXd raw_;    // dim x capacity
  Eigen::MatrixXd feats_;  // L x capacity

  Eigen::VectorXd h_test_, h_ref_, e_opt_;
  Eigen::MatrixXd big_h_ref_;
};

}  // namespace nougat
