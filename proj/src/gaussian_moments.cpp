#include "nougat/gaussian_moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "nougat/csv.hpp"
#include "nougat/errors.hpp"

namespace nougat {

void GaussianSpec::validate() const {
  if (R.rows() != R.cols()) throw ValidationError("GaussianSpec: R must be square");
  if (mu.size() != R.rows()) throw ValidationError("GaussianSpec: mu/R dimension mismatch");
  if (!R.isApprox(R.transpose(), 1e-12)) throw ValidationError("GaussianSpec: R must be symmetric");
  if (R.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw ValidationError("GaussianSpec: R is not positive semidefinite");
    }
  }
}

GaussianSpec GaussianSpec::equicorrelated(int dim, double std_dev, double corr) {
  GaussianSpec s;
  s.mu = Eigen::VectorXd::Zero(dim);
  s.R = Eigen::MatrixXd::Constant(dim, dim, corr * std_dev * std_dev);
  s.R.diagonal().setConstant(std_dev * std_dev);
  s.validate();
  return s;
}

double psi(double s, const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
           const GaussianSpec& spec) {
  const Eigen::Index k = spec.mu.size();
  if (W.rows() != k || W.cols() != k || b.size() != k) {
    throw ValidationError("psi: argument dimension mismatch");
  }
  // With A A^T = R, |I - 2sWR| = |I - 2s A^T W A| and
  // R (I - 2sWR)^{-1} = A (I - 2s A^T W A)^{-1} A^T. The congruence form is
  // symmetric, handles singular R, and its positive-definiteness is exactly
  // the existence condition of the expectation.
  const Eigen::MatrixXd a = psd_sqrt(spec.R);
  const Eigen::MatrixXd congruence =
      Eigen::MatrixXd::Identity(k, k) - 2.0 * s * a.transpose() * W * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (congruence + congruence.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("psi: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (!(lam.minCoeff() > 0.0)) {
    throw NumericalError("psi: I - 2sWR is not positive definite (diverging expectation)");
  }
  const Eigen::VectorXd v = 2.0 * W * spec.mu + b;
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * (a.transpose() * v);
  const double quad = (proj.array().square() / lam.array()).sum();
  const double lin = spec.mu.dot(W * spec.mu) + b.dot(spec.mu);
  const double half_log_det = 0.5 * lam.array().log().sum();
  return std::exp(s * (lin + 0.5 * s * quad) - half_log_det);
}

namespace {

// Shared evaluation core: every moment entry is
//   exp(-(sum of ||atom||^2 of the participating atoms) / (2 sigma^2))
//     * psi(s, c*I, -(2/denominator scaling)...(see call sites), mu, R)
// Participating-atom multisets index a memo since entries depend on the
// atoms only through their sum.
struct MomentContext {
  const Dictionary& dict;
  const GaussianSpec& spec;
  Eigen::VectorXd sq_norms;  // ||atom_i||^2
  double sig2;

  explicit MomentContext(const Dictionary& d, const GaussianSpec& s) : dict(d), spec(s) {
    if (d.dim() != s.mu.size()) throw ValidationError("moments: atom/spec dimension mismatch");
    s.validate();
    sq_norms = d.atoms().colwise().squaredNorm().transpose();
    sig2 = d.params().sigma * d.params().sigma;
  }
};

double h_entry(const MomentContext& c, int l) {
  return std::exp(-c.sq_norms[l] / (2.0 * c.sig2)) *
         psi(-1.0 / (2.0 * c.sig2), Eigen::MatrixXd::Identity(c.spec.mu.size(), c.spec.mu.size()),
             -2.0 * c.dict.atom(l), c.spec);
}

double big_h_entry(const MomentContext& c, int l, int q) {
  return std::exp(-(c.sq_norms[l] + c.sq_norms[q]) / (2.0 * c.sig2)) *
         psi(-1.0 / c.sig2, Eigen::MatrixXd::Identity(c.spec.mu.size(), c.spec.mu.size()),
             -(c.dict.atom(l) + c.dict.atom(q)), c.spec);
}

double gamma_entry(const MomentContext& c, int q, int n, int r, int s) {
  const double pref =
      std::exp(-(c.sq_norms[q] + c.sq_norms[n] + c.sq_norms[r] + c.sq_norms[s]) / (2.0 * c.sig2));
  const Eigen::VectorXd sum = c.dict.atom(q) + c.dict.atom(n) + c.dict.atom(r) + c.dict.atom(s);
  const Eigen::Index k = c.spec.mu.size();
  return pref * psi(-1.0 / c.sig2, 2.0 * Eigen::MatrixXd::Identity(k, k), -sum, c.spec);
}

double delta_entry(const MomentContext& c, int q, int n, int r) {
  const double pref =
      std::exp(-(c.sq_norms[q] + c.sq_norms[n] + c.sq_norms[r]) / (2.0 * c.sig2));
  const Eigen::VectorXd sum = c.dict.atom(q) + c.dict.atom(n) + c.dict.atom(r);
  const Eigen::Index k = c.spec.mu.size();
  return pref * psi(-1.0 / (2.0 * c.sig2), 3.0 * Eigen::MatrixXd::Identity(k, k), -2.0 * sum,
                    c.spec);
}

}  // namespace

Eigen::VectorXd moment_h(const Dictionary& dict, const GaussianSpec& spec) {
  MomentContext c(dict, spec);
  Eigen::VectorXd h(dict.size());
  for (int l = 0; l < dict.size(); ++l) h[l] = h_entry(c, l);
  return h;
}

Eigen::MatrixXd moment_H(const Dictionary& dict, const GaussianSpec& spec) {
  MomentContext c(dict, spec);
  const int l = dict.size();
  Eigen::MatrixXd big_h(l, l);
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      big_h(i, j) = big_h(j, i) = big_h_entry(c, i, j);
    }
  }
  return big_h;
}

Eigen::MatrixXd moment_Gamma(const Dictionary& dict, const GaussianSpec& spec) {
  MomentContext c(dict, spec);
  const int l = dict.size();
  std::map<std::array<int, 4>, double> memo;
  Eigen::MatrixXd gamma(l * l, l * l);
  for (int q = 0; q < l; ++q) {
    for (int n = 0; n < l; ++n) {
      for (int r = 0; r < l; ++r) {
        for (int s = 0; s < l; ++s) {
          std::array<int, 4> key{q, n, r, s};
          std::sort(key.begin(), key.end());
          auto it = memo.find(key);
          if (it == memo.end()) it = memo.emplace(key, gamma_entry(c, q, n, r, s)).first;
          gamma(q * l + r, n * l + s) = it->second;
        }
      }
    }
  }
  return gamma;
}

Eigen::MatrixXd moment_Delta(const Dictionary& dict, const GaussianSpec& spec) {
  MomentContext c(dict, spec);
  const int l = dict.size();
  std::map<std::array<int, 3>, double> memo;
  Eigen::MatrixXd delta(l * l, l);
  for (int q = 0; q < l; ++q) {
    for (int n = 0; n < l; ++n) {
      for (int r = 0; r < l; ++r) {
        std::array<int, 3> key{q, n, r};
        std::sort(key.begin(), key.end());
        auto it = memo.find(key);
        if (it == memo.end()) it = memo.emplace(key, delta_entry(c, q, n, r)).first;
        delta(q * l + r, n) = it->second;
      }
    }
  }
  return delta;
}

MomentSet closed_form_moments(const Dictionary& dict, const GaussianSpec& spec) {
  return MomentSet{moment_h(dict, spec), moment_H(dict, spec), moment_Gamma(dict, spec),
                   moment_Delta(dict, spec)};
}

MomentSet mc_moments(const Dictionary& dict, const std::function<Eigen::VectorXd(Rng&)>& draw,
                     long n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("mc_moments: need at least one sample");
  const int l = dict.size();
  Rng rng(seed);
  MomentSet m;
  m.h = Eigen::VectorXd::Zero(l);
  m.H = Eigen::MatrixXd::Zero(l, l);
  m.Gamma = Eigen::MatrixXd::Zero(l * l, l * l);
  m.Delta = Eigen::MatrixXd::Zero(l * l, l);
  Eigen::VectorXd kk(l * l);
  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd k = dict.kvec(draw(rng));
    const Eigen::MatrixXd outer = k * k.transpose();
    Eigen::Map<const Eigen::VectorXd> outer_vec(outer.data(), l * l);
    m.h += k;
    m.H += outer;
    m.Gamma.noalias() += outer_vec * outer_vec.transpose();
    m.Delta.noalias() += outer_vec * k.transpose();
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  m.h *= inv;
  m.H *= inv;
  m.Gamma *= inv;
  m.Delta *= inv;
  return m;
}

MomentSet mc_moments(const Dictionary& dict, const GaussianSpec& spec, long n_samples,
                     std::uint64_t seed) {
  spec.validate();
  const Eigen::MatrixXd sqrt_cov = psd_sqrt(spec.R);
  return mc_moments(
      dict, [&](Rng& rng) { return mvn_draw(spec.mu, sqrt_cov, rng); }, n_samples, seed);
}

namespace {

void write_block(std::ostream& os, const char* tag, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << tag << ',' << i << ',' << j << ',' << csv::format_double(m(i, j)) << '\n';
    }
  }
}

}  // namespace

void MomentSet::save_csv(std::ostream& os) const {
  os << "# L=" << h.size() << '\n';
  os << "block,i,j,value\n";
  write_block(os, "h", h);
  write_block(os, "H", H);
  write_block(os, "Gamma", Gamma);
  write_block(os, "Delta", Delta);
}

void MomentSet::save_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  save_csv(f);
}

MomentSet MomentSet::load_csv(std::istream& is) {
  std::string line;
  long l = -1;
  MomentSet m;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("L=");
      if (pos != std::string::npos) l = std::stol(line.substr(pos + 2));
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column names row
      if (l < 1) throw DataError("moment file: missing '# L=' header");
      m.h = Eigen::VectorXd::Zero(l);
      m.H = Eigen::MatrixXd::Zero(l, l);
      m.Gamma = Eigen::MatrixXd::Zero(l * l, l * l);
      m.Delta = Eigen::MatrixXd::Zero(l * l, l);
      continue;
    }
    const auto cells = csv::split(line);
    if (cells.size() != 4) throw DataError("moment file line " + std::to_string(line_no));
    const long i = std::stol(cells[1]);
    const long j = std::stol(cells[2]);
    const double v = std::stod(cells[3]);
    if (cells[0] == "h") m.h[i] = v;
    else if (cells[0] == "H") m.H(i, j) = v;
    else if (cells[0] == "Gamma") m.Gamma(i, j) = v;
    else if (cells[0] == "Delta") m.Delta(i, j) = v;
    else throw DataError("moment file: unknown block '" + cells[0] + "'");
  }
  if (!header_seen) throw DataError("moment file: empty");
  return m;
}

MomentSet MomentSet::load_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return load_csv(f);
}

}  // namespace nougat
