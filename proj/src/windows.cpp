#include "nougat/windows.hpp"

#include "nougat/errors.hpp"

namespace nougat {

WindowStats::WindowStats(WindowConfig cfg, const Dictionary& dict)
    : cfg_(cfg), capacity_(cfg.n_ref + cfg.n_test) {
  if (cfg.n_ref < 1 || cfg.n_test < 1) throw ValidationError("window lengths must be >= 1");
  const int l = dict.size();
  raw_.resize(dict.dim(), capacity_);
  feats_.resize(l, capacity_);
  h_test_ = Eigen::VectorXd::Zero(l);
  h_ref_ = Eigen::VectorXd::Zero(l);
  e_opt_ = Eigen::VectorXd::Zero(l);
  big_h_ref_ = Eigen::MatrixXd::Zero(l, l);
}

void WindowStats::require_warm() const {
  if (!warm()) throw ValidationError("window statistics not available before warm-up");
}

const Eigen::VectorXd& WindowStats::h_test() const {
  require_warm();
  return h_test_;
}
const Eigen::VectorXd& WindowStats::h_ref() const {
  require_warm();
  return h_ref_;
}
const Eigen::MatrixXd& WindowStats::H_ref() const {
  require_warm();
  return big_h_ref_;
}
const Eigen::VectorXd& WindowStats::e_opt() const {
  require_warm();
  return e_opt_;
}

void WindowStats::push(const Eigen::VectorXd& y, const Dictionary& dict) {
  if (y.size() != raw_.rows()) throw ValidationError("push: sample dimension mismatch");
  if (dict.size() != feats_.rows()) {
    throw ValidationError("push: dictionary grew without extend_dimension");
  }
  const Eigen::VectorXd ky = dict.kvec(y);

  if (fill_ < capacity_) {
    // Cold phase: append only. head_ stays 0; slots fill in order.
    raw_.col(fill_) = y;
    feats_.col(fill_) = ky;
    ++fill_;
    if (fill_ == capacity_) rebuild();
    return;
  }

  // Full buffer. The slot at head_ holds the sample leaving the reference
  // window; the sample migrating test -> reference sits n_ref positions in.
  const int out = head_;
  const int mig = (head_ + cfg_.n_ref) % capacity_;

  h_test_ += (ky - feats_.col(mig)) / static_cast<double>(cfg_.n_test);
  h_ref_ += (feats_.col(mig) - feats_.col(out)) / static_cast<double>(cfg_.n_ref);
  big_h_ref_ += (feats_.col(mig) * feats_.col(mig).transpose() -
                 feats_.col(out) * feats_.col(out).transpose()) /
                static_cast<double>(cfg_.n_ref);
  e_opt_ = h_ref_ - h_test_;

  raw_.col(out) = y;
  feats_.col(out) = ky;
  head_ = (head_ + 1) % capacity_;

  if (++pushes_since_rebuild_ >= 10L * capacity_) rebuild();
}

void WindowStats::rebuild() {
  const Eigen::Index l = feats_.rows();
  h_test_.setZero(l);
  h_ref_.setZero(l);
  big_h_ref_.setZero(l, l);
  if (fill_ < capacity_) {
    e_opt_.setZero(l);
    return;
  }
  for (int i = 0; i < cfg_.n_ref; ++i) {
    const auto f = feats_.col(slot(i));
    h_ref_ += f;
    big_h_ref_.noalias() += f * f.transpose();
  }
  for (int i = cfg_.n_ref; i < capacity_; ++i) h_test_ += feats_.col(slot(i));
  h_ref_ /= static_cast<double>(cfg_.n_ref);
  big_h_ref_ /= static_cast<double>(cfg_.n_ref);
  h_test_ /= static_cast<double>(cfg_.n_test);
  e_opt_ = h_ref_ - h_test_;
  pushes_since_rebuild_ = 0;
}

void WindowStats::extend_dimension(const Dictionary& dict) {
  const Eigen::Index old_l = feats_.rows();
  if (dict.size() != old_l + 1) {
    throw ValidationError("extend_dimension: dictionary did not grow by exactly one atom");
  }
  feats_.conservativeResize(old_l + 1, Eigen::NoChange);
  // Recompute whole feature columns through the same kvec path used by
  // push, so extended and freshly-pushed entries are bit-identical.
  for (int i = 0; i < fill_; ++i) {
    feats_.col(slot(i)) = dict.kvec(raw_.col(slot(i)));
  }
  rebuild();
}

std::vector<Eigen::VectorXd> WindowStats::ordered_samples() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(fill_);
  for (int i = 0; i < fill_; ++i) out.emplace_back(raw_.col(slot(i)));
  return out;
}

}  // namespace nougat
