#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nougat/detectors.hpp"
#include "nougat/gaussian_moments.hpp"
#include "nougat/kernel.hpp"
#include "nougat/rng.hpp"
#include "nougat/windows.hpp"

namespace nougat {

// i.i.d. draws from N(mu, R); bit-reproducible under a fixed seed.
std::vector<Eigen::VectorXd> gen_gaussian_stream(const GaussianSpec& spec, long n,
                                                 std::uint64_t seed);

// Time-delay embedding of a scalar series: y_t = (y_t, ..., y_{t+k-1}).
std::vector<Eigen::VectorXd> embed(const std::vector<double>& series, int k);

// Gaussian mixture with per-component covariance scaling 1/q:
// component q ~ N(m_q, C_q / q), q = 1..n, m_q ~ N(0, I),
// C_q ~ Wishart(I, dim+2), weights ~ Dirichlet(alpha).
struct GmmParams {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;       // scaled covariances C_q / q
  std::vector<Eigen::MatrixXd> sqrt_covs;
  Eigen::VectorXd weights;
};

GmmParams draw_gmm_params(int dim, int n_components, double alpha, Rng& rng);
Eigen::VectorXd gmm_draw(const GmmParams& params, Rng& rng);

struct GmmChangeSpec {
  int dim = 1;
  int n_components = 1;
  double alpha = 1.0;    // Dirichlet concentration
  long t0 = 0;           // first stream index drawn from the post-change mixture
  long n_t = 1;          // stream length
  std::uint64_t seed = 0;

  void validate() const;
};

struct GmmRealization {
  GmmParams pre;
  GmmParams post;  // == pre when t0 >= n_t (no change)
  std::vector<Eigen::VectorXd> stream;
};

// All mixture parameters are drawn from the spec seed and redrawn at t0.
GmmRealization gen_gmm_change(const GmmChangeSpec& spec);

// Median of the pairwise Euclidean distances (the "median trick" bandwidth).
// Returns 0 for fully degenerate inputs; callers must override then.
double median_bandwidth(const std::vector<Eigen::VectorXd>& samples);

// Pre-tuned dictionary of `size` atoms sampled i.i.d. from `draw`.
Dictionary sample_dictionary(const std::function<Eigen::VectorXd(Rng&)>& draw, int size,
                             KernelParams params, std::uint64_t seed);
Dictionary sample_dictionary(const GaussianSpec& spec, int size, KernelParams params,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// One full detector pass over a stream.

struct SuiteConfig {
  WindowConfig win;

  bool nougat = false;
  bool drulsif = false;
  bool ma = false;
  bool knn = false;
  bool gma = false;

  NougatConfig nougat_cfg;
  Eigen::VectorXd theta0;  // empty = zero
  double drulsif_nu = 1e-3;
  AlarmRule ratio_rule = AlarmRule::shifted;  // NOUGAT and dRuLSIF alarm statistic
  KnnConfig knn_cfg;
  GmaConfig gma_cfg;
  std::optional<Eigen::VectorXd> gma_nominal;

  // Grow the dictionary online with the coherence rule while streaming.
  bool online_dictionary = false;

  std::vector<std::string> active_names() const;
};

// Per-step records start at the first warm instant (stream index
// n_ref + n_test - 1). `raw` holds each detector's statistic, `alarm` the
// nonnegative magnitude compared against a threshold (|g+1| for the
// density-ratio detectors, ||e_opt|| for MA, the cross-edge deficit for
// k-NN, the nominal deviation for GMA; NaN when GMA has no nominal).
struct SuiteResult {
  long first_index = 0;
  std::vector<std::string> detectors;
  Eigen::MatrixXd raw;    // records x detectors
  Eigen::MatrixXd alarm;  // records x detectors
};

SuiteResult run_detector_suite(const std::vector<Eigen::VectorXd>& stream, const Dictionary& dict,
                               const SuiteConfig& cfg, Dictionary* final_dict = nullptr);

// ---------------------------------------------------------------------------
// Monte Carlo harness.

struct McRunInput {
  std::vector<Eigen::VectorXd> stream;
  std::optional<Dictionary> dict;  // overrides the shared dictionary
};

using RunGenerator = std::function<McRunInput(std::uint64_t run_seed)>;

struct McConfig {
  int n_runs = 2;
  std::uint64_t base_seed = 0;
  int n_threads = 0;            // 0 = hardware concurrency
  bool collect_alarm_traces = false;
};

struct McReport {
  long first_index = 0;
  std::vector<std::string> detectors;
  Eigen::MatrixXd mean;      // records x detectors
  Eigen::MatrixXd variance;  // unbiased, records x detectors
  int n_runs = 0;            // successful runs aggregated
  std::vector<std::uint64_t> seeds;
  std::vector<int> failed_runs;
  std::vector<Eigen::MatrixXd> alarm_traces;  // per successful run, when collected

  void save_csv(std::ostream& os) const;
  void save_csv_file(const std::string& path) const;
};

// Runs independent streams with seeds derive_seed(base_seed, run); failed
// runs are reported and skipped. Aggregation order is fixed by run index,
// so results do not depend on thread count or completion order.
McReport monte_carlo(const RunGenerator& generator, const Dictionary* shared_dict,
                     const SuiteConfig& suite, const McConfig& cfg);

}  // namespace nougat
