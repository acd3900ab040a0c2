#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nougat {

struct KernelParams {
  double sigma = 1.0;  // Gaussian kernel bandwidth, > 0
};

// Gaussian reproducing kernel exp(-||a - b||^2 / (2 sigma^2)).
double kappa(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& params);

// Ordered set of kernel atoms with a coherence admission rule: a candidate
// is admitted only while max_i |kappa(candidate, atom_i)| stays at or below
// eta0. Atoms are stored by value and never evicted.
class Dictionary {
 public:
  // Seeds the dictionary with its first atom.
  Dictionary(const Eigen::VectorXd& first_atom, KernelParams params, double eta0,
             std::optional<int> max_atoms = std::nullopt);

  // Fixed dictionary from explicit atoms, bypassing the admission rule
  // (pre-tuned dictionaries sampled from a target distribution).
  static Dictionary from_atoms(const std::vector<Eigen::VectorXd>& atoms, KernelParams params,
                               double eta0 = 1.0);

  // Sequential coherence-rule construction: first sample seeds, each later
  // sample is inserted iff it passes the admission test at that point.
  static Dictionary build(const std::vector<Eigen::VectorXd>& samples, KernelParams params,
                          double eta0, std::optional<int> max_atoms = std::nullopt);

  int size() const { return static_cast<int>(atoms_.cols()); }
  int dim() const { return static_cast<int>(atoms_.rows()); }
  Eigen::VectorXd atom(int i) const { return atoms_.col(i); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }  // dim x L, one atom per column
  const KernelParams& params() const { return params_; }
  double eta0() const { return eta0_; }

  // True iff y should be inserted: max_i |kappa(y, atom_i)| <= eta0
  // (and the optional size cap is not yet reached).
  bool admits(const Eigen::VectorXd& y) const;

  // Inserts y if admitted; returns whether the dictionary grew.
  bool try_insert(const Eigen::VectorXd& y);

  // Feature map [kappa(y, atom_1), ..., kappa(y, atom_L)].
  Eigen::VectorXd kvec(const Eigen::VectorXd& y) const;

  // Largest |kappa(atom_i, atom_j)| over i != j; 0 for a single atom.
  double coherence() const;

  // CSV: '#' header line with sigma and eta0, then one atom per row.
  void save_csv(std::ostream& os) const;
  void save_csv_file(const std::string& path) const;
  static Dictionary load_csv(std::istream& is);
  static Dictionary load_csv_file(const std::string& path);

 private:
  Dictionary(Eigen::MatrixXd atoms, KernelParams params, double eta0, std::optional<int> max_atoms);
  void check_dim(const Eigen::VectorXd& y) const;

  Eigen::MatrixXd atoms_;  // dim x L
  KernelParams params_;
  double eta0_;
  std::optional<int> max_atoms_;
};

}  // namespace nougat
