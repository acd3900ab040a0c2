#include "nougat/simgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <ostream>
#include <thread>

#include "nougat/csv.hpp"
#include "nougat/errors.hpp"

namespace nougat {

std::vector<Eigen::VectorXd> gen_gaussian_stream(const GaussianSpec& spec, long n,
                                                 std::uint64_t seed) {
  if (n < 1) throw ValidationError("gen_gaussian_stream: n must be >= 1");
  spec.validate();
  const Eigen::MatrixXd sqrt_cov = psd_sqrt(spec.R);
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(mvn_draw(spec.mu, sqrt_cov, rng));
  return out;
}

std::vector<Eigen::VectorXd> embed(const std::vector<double>& series, int k) {
  if (k < 1) throw ValidationError("embed: k must be >= 1");
  if (static_cast<long>(series.size()) < k) {
    throw ValidationError("embed: series shorter than embedding dimension");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(series.size() - k + 1);
  for (std::size_t i = 0; i + k <= series.size(); ++i) {
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v[j] = series[i + j];
    out.push_back(std::move(v));
  }
  return out;
}

GmmParams draw_gmm_params(int dim, int n_components, double alpha, Rng& rng) {
  if (dim < 1 || n_components < 1) throw ValidationError("gmm: dim and components must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("gmm: alpha must be > 0");
  GmmParams p;
  p.means.reserve(n_components);
  p.covs.reserve(n_components);
  p.sqrt_covs.reserve(n_components);
  for (int q = 1; q <= n_components; ++q) {
    p.means.push_back(rng.normal_vector(dim));
    Eigen::MatrixXd c = wishart_identity(dim, dim + 2.0, rng) / static_cast<double>(q);
    p.sqrt_covs.push_back(psd_sqrt(c));
    p.covs.push_back(std::move(c));
  }
  p.weights = rng.dirichlet(alpha, n_components);
  return p;
}

Eigen::VectorXd gmm_draw(const GmmParams& params, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  int pick = static_cast<int>(params.weights.size()) - 1;
  for (int q = 0; q < params.weights.size(); ++q) {
    acc += params.weights[q];
    if (u < acc) {
      pick = q;
      break;
    }
  }
  return mvn_draw(params.means[pick], params.sqrt_covs[pick], rng);
}

void GmmChangeSpec::validate() const {
  if (dim < 1) throw ValidationError("gmm: dim must be >= 1");
  if (n_components < 1) throw ValidationError("gmm: n_components must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("gmm: alpha must be > 0");
  if (n_t < 1) throw ValidationError("gmm: n_t must be >= 1");
  if (t0 < 0 || t0 > n_t) throw ValidationError("gmm: t0 must be in [0, n_t]");
}

GmmRealization gen_gmm_change(const GmmChangeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  GmmRealization r;
  r.pre = draw_gmm_params(spec.dim, spec.n_components, spec.alpha, rng);
  r.stream.reserve(static_cast<std::size_t>(spec.n_t));
  const long change = std::min(spec.t0, spec.n_t);
  for (long i = 0; i < change; ++i) r.stream.push_back(gmm_draw(r.pre, rng));
  if (change < spec.n_t) {
    r.post = draw_gmm_params(spec.dim, spec.n_components, spec.alpha, rng);
    for (long i = change; i < spec.n_t; ++i) r.stream.push_back(gmm_draw(r.post, rng));
  } else {
    r.post = r.pre;
  }
  return r;
}

double median_bandwidth(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.size() < 2) throw ValidationError("median_bandwidth: need at least 2 samples");
  std::vector<double> d;
  d.reserve(samples.size() * (samples.size() - 1) / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      d.push_back((samples[i] - samples[j]).norm());
    }
  }
  const std::size_t n = d.size();
  auto mid = d.begin() + n / 2;
  std::nth_element(d.begin(), mid, d.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(d.begin(), mid);
  return 0.5 * (lo + hi);
}

Dictionary sample_dictionary(const std::function<Eigen::VectorXd(Rng&)>& draw, int size,
                             KernelParams params, std::uint64_t seed) {
  if (size < 1) throw ValidationError("sample_dictionary: size must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::VectorXd> atoms;
  atoms.reserve(size);
  for (int i = 0; i < size; ++i) atoms.push_back(draw(rng));
  return Dictionary::from_atoms(atoms, params);
}

Dictionary sample_dictionary(const GaussianSpec& spec, int size, KernelParams params,
                             std::uint64_t seed) {
  spec.validate();
  const Eigen::MatrixXd sqrt_cov = psd_sqrt(spec.R);
  return sample_dictionary([&](Rng& rng) { return mvn_draw(spec.mu, sqrt_cov, rng); }, size,
                           params, seed);
}

std::vector<std::string> SuiteConfig::active_names() const {
  std::vector<std::string> names;
  if (nougat) names.push_back("nougat");
  if (drulsif) names.push_back("drulsif");
  if (ma) names.push_back("ma");
  if (knn) names.push_back("knn");
  if (gma) names.push_back("gma");
  return names;
}

SuiteResult run_detector_suite(const std::vector<Eigen::VectorXd>& stream, const Dictionary& dict,
                               const SuiteConfig& cfg, Dictionary* final_dict) {
  const auto names = cfg.active_names();
  if (names.empty()) throw ValidationError("detector suite: no detector selected");
  const long n = static_cast<long>(stream.size());
  const long warm_at = cfg.win.n_ref + cfg.win.n_test - 1;
  const long n_records = std::max<long>(0, n - warm_at);

  Dictionary d = dict;
  WindowStats stats(cfg.win, d);
  std::optional<NougatDetector> ng;
  std::optional<GmaDetector> gm;
  if (cfg.nougat) ng.emplace(cfg.nougat_cfg, d.size(), cfg.theta0);
  if (cfg.gma) {
    gm.emplace(cfg.gma_cfg, d.size());
    if (cfg.gma_nominal) gm->set_nominal(*cfg.gma_nominal);
  }

  SuiteResult res;
  res.first_index = warm_at;
  res.detectors = names;
  res.raw.resize(n_records, static_cast<Eigen::Index>(names.size()));
  res.alarm.resize(n_records, static_cast<Eigen::Index>(names.size()));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  long rec = 0;
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd& y = stream[i];
    if (cfg.online_dictionary && d.try_insert(y)) {
      stats.extend_dimension(d);
      if (ng) ng->notify_growth();
      if (gm) gm->notify_growth();
    }
    stats.push(y, d);
    if (gm) gm->step(y, d);
    if (!stats.warm()) continue;

    Eigen::Index col = 0;
    if (cfg.nougat) {
      ng->step(stats);
      const double g = ng->statistic();
      res.raw(rec, col) = g;
      res.alarm(rec, col) =
          cfg.ratio_rule == AlarmRule::shifted ? std::abs(g + 1.0) : std::abs(g);
      ++col;
    }
    if (cfg.drulsif) {
      const Eigen::VectorXd theta = drulsif_solve(stats, cfg.drulsif_nu);
      const double g = theta.dot(stats.h_test());
      res.raw(rec, col) = g;
      res.alarm(rec, col) =
          cfg.ratio_rule == AlarmRule::shifted ? std::abs(g + 1.0) : std::abs(g);
      ++col;
    }
    if (cfg.ma) {
      const double s = ma_statistic(stats);
      res.raw(rec, col) = s;
      res.alarm(rec, col) = s;
      ++col;
    }
    if (cfg.knn) {
      const double s = knn_statistic(stats.ordered_samples(), cfg.win.n_ref, cfg.win.n_test,
                                     cfg.knn_cfg);
      res.raw(rec, col) = s;
      res.alarm(rec, col) = -s;  // cross-edge deficit grows under a change
      ++col;
    }
    if (cfg.gma) {
      const auto s = gm->statistic();
      res.raw(rec, col) = s ? *s : nan;
      res.alarm(rec, col) = s ? *s : nan;
      ++col;
    }
    ++rec;
  }
  if (final_dict) *final_dict = d;
  return res;
}

McReport monte_carlo(const RunGenerator& generator, const Dictionary* shared_dict,
                     const SuiteConfig& suite, const McConfig& cfg) {
  if (cfg.n_runs < 2) throw ValidationError("monte_carlo: n_runs must be >= 2");
  const int n_threads = cfg.n_threads > 0
                            ? cfg.n_threads
                            : std::max(1u, std::thread::hardware_concurrency());

  McReport rep;
  rep.detectors = suite.active_names();
  rep.seeds.reserve(cfg.n_runs);
  for (int r = 0; r < cfg.n_runs; ++r) rep.seeds.push_back(derive_seed(cfg.base_seed, r));

  struct Slot {
    bool ok = false;
    std::string error;
    SuiteResult result;
  };

  Eigen::MatrixXd mean, m2;
  long n_records = -1;
  int aggregated = 0;

  const int block = std::max(1, std::min(64, cfg.n_runs));
  std::vector<Slot> slots(block);
  for (int begin = 0; begin < cfg.n_runs; begin += block) {
    const int end = std::min(cfg.n_runs, begin + block);
    std::atomic<int> cursor{begin};
    auto worker = [&]() {
      while (true) {
        const int r = cursor.fetch_add(1);
        if (r >= end) break;
        Slot& s = slots[r - begin];
        s = Slot{};
        try {
          McRunInput input = generator(rep.seeds[r]);
          const Dictionary* d = input.dict ? &*input.dict : shared_dict;
          if (!d) throw ValidationError("monte_carlo: no dictionary available for run");
          s.result = run_detector_suite(input.stream, *d, suite);
          if (!s.result.raw.allFinite()) {
            // NaN is legitimate only for GMA without a nominal.
            for (Eigen::Index c = 0; c < s.result.raw.cols(); ++c) {
              if (s.result.detectors[c] != "gma" && !s.result.raw.col(c).allFinite()) {
                throw NumericalError("non-finite statistic from " + s.result.detectors[c]);
              }
            }
          }
          s.ok = true;
        } catch (const std::exception& e) {
          s.error = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < n_threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    // Merge strictly in run order: the aggregate is independent of the
    // thread count and of completion order.
    for (int r = begin; r < end; ++r) {
      Slot& s = slots[r - begin];
      if (!s.ok) {
        std::cerr << "monte_carlo: run " << r << " failed: " << s.error << " (skipped)\n";
        rep.failed_runs.push_back(r);
        continue;
      }
      if (n_records < 0) {
        n_records = s.result.raw.rows();
        rep.first_index = s.result.first_index;
        mean = Eigen::MatrixXd::Zero(n_records, s.result.raw.cols());
        m2 = Eigen::MatrixXd::Zero(n_records, s.result.raw.cols());
      }
      if (s.result.raw.rows() != n_records) {
        throw ValidationError("monte_carlo: runs produced different record counts");
      }
      ++aggregated;
      const Eigen::MatrixXd delta = s.result.raw - mean;
      mean += delta / static_cast<double>(aggregated);
      m2 += delta.cwiseProduct(s.result.raw - mean);
      if (cfg.collect_alarm_traces) rep.alarm_traces.push_back(std::move(s.result.alarm));
    }
  }
  if (aggregated < 2) throw NumericalError("monte_carlo: fewer than 2 successful runs");
  rep.n_runs = aggregated;
  rep.mean = std::move(mean);
  rep.variance = m2 / static_cast<double>(aggregated - 1);
  return rep;
}

void McReport::save_csv(std::ostream& os) const {
  std::vector<std::string> names{"t"};
  for (const auto& d : detectors) {
    names.push_back(d + "_mean");
    names.push_back(d + "_var");
  }
  names.push_back("runs");
  csv::write_header(os, names);
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    std::vector<double> row{static_cast<double>(first_index + i)};
    for (Eigen::Index c = 0; c < mean.cols(); ++c) {
      row.push_back(mean(i, c));
      row.push_back(variance(i, c));
    }
    row.push_back(static_cast<double>(n_runs));
    csv::write_values(os, row);
  }
}

void McReport::save_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  save_csv(f);
}

}  // namespace nougat
