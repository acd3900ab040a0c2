#include "nougat/kernel.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nougat/csv.hpp"
#include "nougat/errors.hpp"

namespace nougat {

namespace {

void check_kernel_params(const KernelParams& params) {
  if (!(params.sigma > 0.0)) throw ValidationError("kernel bandwidth sigma must be > 0");
}

}  // namespace

double kappa(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& params) {
  check_kernel_params(params);
  if (a.size() != b.size()) {
    throw ValidationError("kappa: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  const double d2 = (a - b).squaredNorm();
  return std::exp(-d2 / (2.0 * params.sigma * params.sigma));
}

Dictionary::Dictionary(Eigen::MatrixXd atoms, KernelParams params, double eta0,
                       std::optional<int> max_atoms)
    : atoms_(std::move(atoms)), params_(params), eta0_(eta0), max_atoms_(max_atoms) {
  check_kernel_params(params_);
  if (!(eta0_ > 0.0)) throw ValidationError("coherence threshold eta0 must be > 0");
  if (atoms_.cols() < 1) throw ValidationError("dictionary needs at least one atom");
  if (max_atoms_ && *max_atoms_ < 1) throw ValidationError("max_atoms must be >= 1");
}

Dictionary::Dictionary(const Eigen::VectorXd& first_atom, KernelParams params, double eta0,
                       std::optional<int> max_atoms)
    : Dictionary(Eigen::MatrixXd(first_atom), params, eta0, max_atoms) {}

Dictionary Dictionary::from_atoms(const std::vector<Eigen::VectorXd>& atoms, KernelParams params,
                                  double eta0) {
  if (atoms.empty()) throw ValidationError("from_atoms: no atoms given");
  Eigen::MatrixXd m(atoms.front().size(), static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != m.rows()) throw ValidationError("from_atoms: inconsistent atom dims");
    m.col(static_cast<Eigen::Index>(i)) = atoms[i];
  }
  return Dictionary(std::move(m), params, eta0, std::nullopt);
}

Dictionary Dictionary::build(const std::vector<Eigen::VectorXd>& samples, KernelParams params,
                             double eta0, std::optional<int> max_atoms) {
  if (samples.empty()) throw ValidationError("build: empty sample sequence");
  Dictionary d(samples.front(), params, eta0, max_atoms);
  for (std::size_t i = 1; i < samples.size(); ++i) d.try_insert(samples[i]);
  return d;
}

void Dictionary::check_dim(const Eigen::VectorXd& y) const {
  if (y.size() != atoms_.rows()) {
    throw ValidationError("dictionary: dimension mismatch (" + std::to_string(y.size()) + " vs " +
                          std::to_string(atoms_.rows()) + ")");
  }
}

Eigen::VectorXd Dictionary::kvec(const Eigen::VectorXd& y) const {
  check_dim(y);
  const double denom = -2.0 * params_.sigma * params_.sigma;
  return ((atoms_.colwise() - y).colwise().squaredNorm() / denom).array().exp().transpose();
}

bool Dictionary::admits(const Eigen::VectorXd& y) const {
  if (max_atoms_ && size() >= *max_atoms_) return false;
  return kvec(y).cwiseAbs().maxCoeff() <= eta0_;
}

bool Dictionary::try_insert(const Eigen::VectorXd& y) {
  if (!admits(y)) return false;
  atoms_.conservativeResize(Eigen::NoChange, atoms_.cols() + 1);
  atoms_.col(atoms_.cols() - 1) = y;
  return true;
}

double Dictionary::coherence() const {
  double best = 0.0;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) {
      best = std::max(best, std::abs(kappa(atoms_.col(i), atoms_.col(j), params_)));
    }
  }
  return best;
}

void Dictionary::save_csv(std::ostream& os) const {
  os << "# sigma=" << csv::format_double(params_.sigma) << " eta0=" << csv::format_double(eta0_)
     << '\n';
  std::vector<std::string> names;
  for (int j = 0; j < dim(); ++j) names.push_back("x" + std::to_string(j));
  csv::write_header(os, names);
  for (int i = 0; i < size(); ++i) {
    std::vector<double> row(atoms_.col(i).data(), atoms_.col(i).data() + dim());
    csv::write_values(os, row);
  }
}

void Dictionary::save_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  save_csv(f);
}

Dictionary Dictionary::load_csv(std::istream& is) {
  csv::Table t = csv::read_table(is);
  double sigma = 0.0, eta0 = 0.0;
  for (const std::string& c : t.comments) {
    std::istringstream ss(c);
    std::string tok;
    while (ss >> tok) {
      if (tok.rfind("sigma=", 0) == 0) sigma = std::stod(tok.substr(6));
      if (tok.rfind("eta0=", 0) == 0) eta0 = std::stod(tok.substr(5));
    }
  }
  if (!(sigma > 0.0)) throw DataError("dictionary file: missing or invalid sigma header");
  if (!(eta0 > 0.0)) throw DataError("dictionary file: missing or invalid eta0 header");
  if (t.rows.empty()) throw DataError("dictionary file: no atoms");
  Eigen::MatrixXd atoms = t.matrix().transpose();
  return Dictionary(std::move(atoms), KernelParams{sigma}, eta0, std::nullopt);
}

Dictionary Dictionary::load_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return load_csv(f);
}

}  // namespace nougat
