// Command-line front end: streaming change-point detection over CSV input,
// analytical mean/variance traces, Monte Carlo campaigns, and runtime
// benchmarks. Exit codes: 0 success, 1 parameter validation error, 2 data
// error, 3 numerical error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nougat/csv.hpp"
#include "nougat/detectors.hpp"
#include "nougat/errors.hpp"
#include "nougat/gaussian_moments.hpp"
#include "nougat/kernel.hpp"
#include "nougat/metrics.hpp"
#include "nougat/rng.hpp"
#include "nougat/simgen.hpp"
#include "nougat/theory.hpp"
#include "nougat/windows.hpp"

using namespace nougat;

namespace {

struct DetectOptions {
  std::string input;
  std::string output;
  std::vector<std::string> detectors{"nougat"};
  int n_ref = 250;
  int n_test = 250;
  double sigma = 1.0;
  double mu = 1e-3;
  double nu = 1e-3;
  double xi = 1.5;
  double eta0 = 0.7;
  int embed_k = 1;
  std::uint64_t seed = 0;
  std::string dict_path;  // load if present, save after an online build
  int max_atoms = 0;      // 0 = uncapped
  double gma_alpha = 0.05;
  std::string gma_nominal_path;
  int knn_k = 10;
  std::string rule = "shifted";
};

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw DataError("cannot write '" + path + "'");
  return file;
}

bool file_exists(const std::string& path) {
  std::ifstream f(path);
  return f.good();
}

AlarmRule parse_rule(const std::string& rule) {
  if (rule == "shifted") return AlarmRule::shifted;
  if (rule == "centered") return AlarmRule::centered;
  throw ValidationError("alarm rule must be 'shifted' or 'centered'");
}

struct DetectorFlags {
  bool nougat = false, drulsif = false, ma = false, knn = false, gma = false;
};

DetectorFlags parse_detectors(const std::vector<std::string>& names) {
  DetectorFlags f;
  for (const auto& n : names) {
    if (n == "nougat") f.nougat = true;
    else if (n == "drulsif") f.drulsif = true;
    else if (n == "ma") f.ma = true;
    else if (n == "knn") f.knn = true;
    else if (n == "gma") f.gma = true;
    else throw ValidationError("unknown detector '" + n + "'");
  }
  if (!(f.nougat || f.drulsif || f.ma || f.knn || f.gma)) {
    throw ValidationError("no detector selected");
  }
  return f;
}

// Incremental detection pipeline shared by file and stdin inputs. Follows
// the online algorithm ordering: dictionary admission, window update,
// weight update, statistic, test.
class DetectPipeline {
 public:
  explicit DetectPipeline(const DetectOptions& opt)
      : opt_(opt), flags_(parse_detectors(opt.detectors)) {
    if (opt.n_ref < 1 || opt.n_test < 1) throw ValidationError("window lengths must be >= 1");
    if (!(opt.sigma > 0.0)) throw ValidationError("sigma must be > 0");
    if (!(opt.eta0 > 0.0 && opt.eta0 <= 1.0)) throw ValidationError("eta0 must be in (0, 1]");
    if (opt.embed_k < 1) throw ValidationError("embed-k must be >= 1");
    if (opt.knn_k < 1) throw ValidationError("knn-k must be >= 1");
    if (flags_.knn && opt.knn_k >= opt.n_ref + opt.n_test) {
      throw ValidationError("knn-k must be below n_ref + n_test");
    }
    NougatConfig probe;  // shares the mu/nu domain checks
    probe.mu = opt.mu;
    probe.nu = opt.nu;
    probe.validate();
    GmaConfig{opt.gma_alpha}.validate();
    if (!opt.dict_path.empty() && file_exists(opt.dict_path)) {
      dict_.emplace(Dictionary::load_csv_file(opt.dict_path));
      online_ = false;
    }
    if (!opt.gma_nominal_path.empty()) {
      const auto table = csv::read_table_file(opt.gma_nominal_path);
      const Eigen::MatrixXd m = table.matrix();
      gma_nominal_ = Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
    }
  }

  std::vector<std::string> header() const {
    std::vector<std::string> names{"t"};
    for (const auto& d : active_names()) {
      names.push_back(d + "_stat");
      names.push_back(d + "_alarm");
    }
    return names;
  }

  // Returns the emitted row once windows are warm.
  std::optional<std::vector<double>> process(const Eigen::VectorXd& y) {
    if (!dict_) {
      // First sample seeds an online dictionary.
      std::optional<int> cap;
      if (opt_.max_atoms > 0) cap = opt_.max_atoms;
      dict_.emplace(y, KernelParams{opt_.sigma}, opt_.eta0, cap);
      online_ = true;
    } else if (online_ && dict_->admits(y)) {
      dict_->try_insert(y);
      if (stats_) stats_->extend_dimension(*dict_);
      if (nougat_) nougat_->notify_growth();
      if (gma_) gma_->notify_growth();
    }
    ensure_detectors();
    stats_->push(y, *dict_);
    if (gma_) gma_->step(y, *dict_);
    const long t = t_++;
    if (!stats_->warm()) return std::nullopt;

    if (flags_.gma && !gma_->statistic().has_value() && gma_nominal_auto_) {
      // Nominal feature mean estimated from the warm-up buffer.
      Eigen::VectorXd nominal = Eigen::VectorXd::Zero(dict_->size());
      const auto buffered = stats_->ordered_samples();
      for (const auto& s : buffered) nominal += dict_->kvec(s);
      gma_->set_nominal(nominal / static_cast<double>(buffered.size()));
    }

    std::vector<double> row{static_cast<double>(t)};
    if (flags_.nougat) {
      nougat_->step(*stats_);
      row.push_back(nougat_->statistic());
      row.push_back(nougat_->alarm() ? 1.0 : 0.0);
    }
    if (flags_.drulsif) {
      const Eigen::VectorXd theta = drulsif_solve(*stats_, opt_.nu);
      const double g = theta.dot(stats_->h_test());
      const double mag =
          parse_rule(opt_.rule) == AlarmRule::shifted ? std::abs(g + 1.0) : std::abs(g);
      row.push_back(g);
      row.push_back(mag > opt_.xi ? 1.0 : 0.0);
    }
    if (flags_.ma) {
      const double s = ma_statistic(*stats_);
      row.push_back(s);
      row.push_back(s > opt_.xi ? 1.0 : 0.0);
    }
    if (flags_.knn) {
      const double s = knn_statistic(stats_->ordered_samples(), opt_.n_ref, opt_.n_test,
                                     KnnConfig{opt_.knn_k});
      row.push_back(s);
      row.push_back(-s > opt_.xi ? 1.0 : 0.0);
    }
    if (flags_.gma) {
      const auto s = gma_->statistic();
      row.push_back(s ? *s : std::numeric_limits<double>::quiet_NaN());
      row.push_back((s && *s > opt_.xi) ? 1.0 : 0.0);
    }
    return row;
  }

  void finish() const {
    if (online_ && !opt_.dict_path.empty() && dict_) dict_->save_csv_file(opt_.dict_path);
  }

 private:
  std::vector<std::string> active_names() const {
    std::vector<std::string> names;
    if (flags_.nougat) names.push_back("nougat");
    if (flags_.drulsif) names.push_back("drulsif");
    if (flags_.ma) names.push_back("ma");
    if (flags_.knn) names.push_back("knn");
    if (flags_.gma) names.push_back("gma");
    return names;
  }

  void ensure_detectors() {
    if (stats_) return;
    stats_.emplace(WindowConfig{opt_.n_ref, opt_.n_test}, *dict_);
    if (flags_.nougat) {
      NougatConfig cfg;
      cfg.mu = opt_.mu;
      cfg.nu = opt_.nu;
      cfg.xi = opt_.xi;
      cfg.rule = parse_rule(opt_.rule);
      nougat_.emplace(cfg, dict_->size());
    }
    if (flags_.gma) {
      gma_.emplace(GmaConfig{opt_.gma_alpha}, dict_->size());
      if (gma_nominal_) {
        if (gma_nominal_->size() != dict_->size()) {
          throw ValidationError("gma nominal length != dictionary size");
        }
        gma_->set_nominal(*gma_nominal_);
        gma_nominal_auto_ = false;
      }
    }
  }

  DetectOptions opt_;
  DetectorFlags flags_;
  bool online_ = true;
  long t_ = 0;
  std::optional<Dictionary> dict_;
  std::optional<WindowStats> stats_;
  std::optional<NougatDetector> nougat_;
  std::optional<GmaDetector> gma_;
  std::optional<Eigen::VectorXd> gma_nominal_;
  bool gma_nominal_auto_ = true;
};

int run_detect(const DetectOptions& opt) {
  DetectPipeline pipeline(opt);
  std::ofstream out_file;
  std::ostream& os = open_output(opt.output, out_file);
  csv::write_header(os, pipeline.header());

  auto emit = [&](const std::optional<std::vector<double>>& row) {
    if (row) {
      csv::write_values(os, *row);
      if (&os == &std::cout) os.flush();  // streaming mode: one row out per row in
    }
  };

  if (opt.input == "-") {
    std::string line;
    std::size_t line_no = 0;
    bool header_skipped = false;
    std::vector<double> scalar_series;  // only when embedding
    std::size_t next_window = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (!header_skipped) {
        header_skipped = true;
        continue;
      }
      const auto vals = csv::parse_numeric_row(line, line_no);
      if (opt.embed_k > 1) {
        if (vals.size() != 1) {
          throw DataError("line " + std::to_string(line_no) +
                          ": embedding requires a single numeric column");
        }
        scalar_series.push_back(vals[0]);
        if (scalar_series.size() >= static_cast<std::size_t>(opt.embed_k)) {
          Eigen::VectorXd v(opt.embed_k);
          for (int j = 0; j < opt.embed_k; ++j) v[j] = scalar_series[next_window + j];
          ++next_window;
          emit(pipeline.process(v));
        }
      } else {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
        emit(pipeline.process(v));
      }
    }
    pipeline.finish();
    return 0;
  }

  const csv::Table table = csv::read_table_file(opt.input);
  const Eigen::MatrixXd data = table.matrix();
  if (data.rows() == 0) throw DataError("input has no data rows");
  std::vector<Eigen::VectorXd> stream;
  if (opt.embed_k > 1) {
    if (data.cols() != 1) {
      throw DataError("embedding requires a single numeric column, got " +
                      std::to_string(data.cols()));
    }
    std::vector<double> series(data.col(0).data(), data.col(0).data() + data.rows());
    stream = embed(series, opt.embed_k);
  } else {
    for (Eigen::Index i = 0; i < data.rows(); ++i) stream.push_back(data.row(i).transpose());
  }
  for (const auto& y : stream) emit(pipeline.process(y));
  pipeline.finish();
  return 0;
}

GaussianSpec spec_from_json(const nlohmann::json& j, const std::string& mu_key,
                            const std::string& r_key) {
  GaussianSpec s;
  const auto mu = j.at(mu_key).get<std::vector<double>>();
  s.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), mu.size());
  const auto rows = j.at(r_key).get<std::vector<std::vector<double>>>();
  s.R.resize(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw DataError("covariance must be square");
    for (std::size_t k = 0; k < rows[i].size(); ++k) s.R(i, k) = rows[i][k];
  }
  s.validate();
  return s;
}

struct GaussPair {
  GaussianSpec p0;
  std::optional<GaussianSpec> p1;
};

struct TheoryOptionsCli {
  std::string output;
  std::string spec_json;
  int dim = 2;
  double std0 = 0.5, corr0 = 0.25;
  double std1 = -1.0, corr1 = 0.0;  // std1 > 0 selects a change scenario
  long t0 = 0;
  long horizon = 1000;
  double sigma = 0.25;
  double mu = 5e-4;
  double nu = 1e-3;
  int n_ref = 250;
  int n_test = 250;
  int dict_size = 16;
  std::uint64_t dict_seed = 1;
  std::string dict_path;
  double theta0 = 0.0;
  bool neglect_mean = false;
  bool steady = false;
  bool emit_mean_vector = false;
  long mc_moments_n = 0;  // > 0: Monte Carlo moment estimation instead of closed form
  std::uint64_t seed = 0;
  std::string moments0_path, moments1_path;
  std::string save_moments0, save_moments1;
};

GaussPair theory_specs(const TheoryOptionsCli& opt) {
  if (!opt.spec_json.empty()) {
    std::ifstream f(opt.spec_json);
    if (!f) throw DataError("cannot open '" + opt.spec_json + "'");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("spec json: ") + e.what());
    }
    GaussPair g{spec_from_json(j, "mu0", "R0"), std::nullopt};
    if (j.contains("mu1")) g.p1 = spec_from_json(j, "mu1", "R1");
    return g;
  }
  GaussPair g{GaussianSpec::equicorrelated(opt.dim, opt.std0, opt.corr0), std::nullopt};
  if (opt.std1 > 0.0) g.p1 = GaussianSpec::equicorrelated(opt.dim, opt.std1, opt.corr1);
  return g;
}

int run_theory(const TheoryOptionsCli& opt) {
  const GaussPair specs = theory_specs(opt);
  Dictionary dict = !opt.dict_path.empty()
                        ? Dictionary::load_csv_file(opt.dict_path)
                        : sample_dictionary(specs.p0, opt.dict_size, KernelParams{opt.sigma},
                                            opt.dict_seed);

  auto make_moments = [&](const GaussianSpec& spec, const std::string& load) {
    if (!load.empty()) return MomentSet::load_csv_file(load);
    if (opt.mc_moments_n > 0) return mc_moments(dict, spec, opt.mc_moments_n, opt.seed);
    return closed_form_moments(dict, spec);
  };
  const MomentSet m0 = make_moments(specs.p0, opt.moments0_path);
  if (!opt.save_moments0.empty()) m0.save_csv_file(opt.save_moments0);

  AlgoConfig cfg;
  cfg.mu = opt.mu;
  cfg.nu = opt.nu;
  cfg.n_ref = opt.n_ref;
  cfg.n_test = opt.n_test;
  if (opt.theta0 != 0.0) cfg.theta0 = Eigen::VectorXd::Constant(dict.size(), opt.theta0);

  TheoryOptions topts;
  topts.neglect_mean = opt.neglect_mean;

  TheoryTrace trace;
  if (specs.p1) {
    if (opt.t0 < 1) throw ValidationError("change scenario requires --t0 >= 1");
    const MomentSet m1 = make_moments(*specs.p1, opt.moments1_path);
    if (!opt.save_moments1.empty()) m1.save_csv_file(opt.save_moments1);
    trace = theory_trace(cfg, ChangeScenario{opt.t0, m0, m1}, opt.horizon, topts);
  } else {
    trace = theory_trace(cfg, null_scenario(m0), opt.horizon, topts);
  }

  std::ofstream out_file;
  std::ostream& os = open_output(opt.output, out_file);
  if (opt.steady) {
    const SteadyState ss = steady_state_null(cfg, m0);
    os << "# var_inf=" << csv::format_double(ss.var_inf)
       << " rho_S=" << csv::format_double(ss.spectral_radius)
       << " smallmu_var=" << csv::format_double(smallmu_variance(cfg, m0)) << '\n';
  }
  trace.save_csv(os, opt.emit_mean_vector);
  return 0;
}

struct McOptionsCli {
  std::string output;
  std::string generator = "gaussian";
  int runs = 100;
  std::uint64_t seed = 0;
  int threads = 0;
  long horizon = 1000;
  long t0 = 0;  // update steps (gaussian) / stream index (gmm)
  int dim = 2;
  double std0 = 0.5, corr0 = 0.25;
  double std1 = -1.0, corr1 = 0.0;
  int gmm_components = 3;
  double gmm_alpha = 5.0;
  long nt = 700;
  std::vector<std::string> detectors{"nougat"};
  double sigma = 0.25;
  double mu = 5e-4;
  double nu = 1e-3;
  int n_ref = 250;
  int n_test = 250;
  int dict_size = 16;
  std::uint64_t dict_seed = 1;
  std::string dict_path;
  double theta0 = 0.0;
  int knn_k = 10;
  double gma_alpha = 0.05;
  std::string roc_out;    // ROC table per detector (needs --t0)
  std::string delay_out;  // MTFA/MTD vs PFA table per detector (needs --t0)
  int threshold_count = 200;
};

SuiteConfig suite_from(const McOptionsCli& opt, int dict_len) {
  const DetectorFlags f = parse_detectors(opt.detectors);
  SuiteConfig s;
  s.win = WindowConfig{opt.n_ref, opt.n_test};
  s.nougat = f.nougat;
  s.drulsif = f.drulsif;
  s.ma = f.ma;
  s.knn = f.knn;
  s.gma = f.gma;
  s.nougat_cfg.mu = opt.mu;
  s.nougat_cfg.nu = opt.nu;
  s.drulsif_nu = opt.nu;
  s.knn_cfg.k_neighbors = opt.knn_k;
  s.gma_cfg.alpha = opt.gma_alpha;
  if (opt.theta0 != 0.0) s.theta0 = Eigen::VectorXd::Constant(dict_len, opt.theta0);
  return s;
}

int run_mc(const McOptionsCli& opt) {
  McConfig mc;
  mc.n_runs = opt.runs;
  mc.base_seed = opt.seed;
  mc.n_threads = opt.threads;
  const bool want_curves = !opt.roc_out.empty() || !opt.delay_out.empty();
  if (want_curves) {
    if (opt.t0 < 1) throw ValidationError("--roc-out/--delay-out require --t0");
    mc.collect_alarm_traces = true;
  }

  McReport report;
  if (opt.generator == "gaussian") {
    const GaussianSpec p0 = GaussianSpec::equicorrelated(opt.dim, opt.std0, opt.corr0);
    Dictionary dict = !opt.dict_path.empty()
                          ? Dictionary::load_csv_file(opt.dict_path)
                          : sample_dictionary(p0, opt.dict_size, KernelParams{opt.sigma},
                                              opt.dict_seed);
    const SuiteConfig suite = suite_from(opt, dict.size());
    // Warm prefix aligns Monte Carlo update steps with the theory clock.
    const long prefix = opt.n_ref + opt.n_test - 1;
    const long total = prefix + opt.horizon;
    std::optional<GaussianSpec> p1;
    if (opt.std1 > 0.0) {
      if (opt.t0 < 1) throw ValidationError("gaussian change requires --t0 >= 1");
      p1 = GaussianSpec::equicorrelated(opt.dim, opt.std1, opt.corr1);
    }
    report = monte_carlo(
        [&](std::uint64_t seed) {
          if (!p1) return McRunInput{gen_gaussian_stream(p0, total, seed), std::nullopt};
          const long n_pre = prefix + opt.t0 - 1;
          auto stream = gen_gaussian_stream(p0, n_pre, seed);
          auto post = gen_gaussian_stream(*p1, total - n_pre, splitmix64(seed));
          stream.insert(stream.end(), post.begin(), post.end());
          return McRunInput{std::move(stream), std::nullopt};
        },
        &dict, suite, mc);
    report.first_index = 1;  // update-step units
  } else if (opt.generator == "gmm") {
    const SuiteConfig suite = suite_from(opt, opt.dict_size);
    report = monte_carlo(
        [&](std::uint64_t seed) {
          GmmChangeSpec gs;
          gs.dim = opt.dim;
          gs.n_components = opt.gmm_components;
          gs.alpha = opt.gmm_alpha;
          gs.t0 = opt.t0;
          gs.n_t = opt.nt;
          gs.seed = seed;
          auto real = gen_gmm_change(gs);
          // Bandwidth by the median trick on an independent null sample,
          // dictionary sampled from the same pre-change mixture.
          Rng aux(splitmix64(seed ^ 0xD1C7A11CULL));
          std::vector<Eigen::VectorXd> pilot;
          pilot.reserve(256);
          for (int i = 0; i < 256; ++i) pilot.push_back(gmm_draw(real.pre, aux));
          double sigma = median_bandwidth(pilot);
          if (!(sigma > 0.0)) sigma = 1.0;
          Dictionary dict =
              sample_dictionary([&](Rng& r) { return gmm_draw(real.pre, r); }, opt.dict_size,
                                KernelParams{sigma}, splitmix64(seed ^ 0xD1C70ULL));
          return McRunInput{std::move(real.stream), std::move(dict)};
        },
        nullptr, suite, mc);
  } else {
    throw ValidationError("generator must be 'gaussian' or 'gmm'");
  }

  if (want_curves) {
    const long horizon = report.first_index + report.alarm_traces.front().rows() - 1;
    std::ofstream roc_file, delay_file;
    if (!opt.roc_out.empty()) {
      roc_file.open(opt.roc_out);
      if (!roc_file) throw DataError("cannot write '" + opt.roc_out + "'");
      roc_file << "detector,threshold,pfa,pd\n";
    }
    if (!opt.delay_out.empty()) {
      delay_file.open(opt.delay_out);
      if (!delay_file) throw DataError("cannot write '" + opt.delay_out + "'");
      delay_file << "detector,threshold,pfa,pd,mtfa,mtd\n";
    }
    for (std::size_t d = 0; d < report.detectors.size(); ++d) {
      std::vector<StatTrace> traces;
      traces.reserve(report.alarm_traces.size());
      for (const auto& run : report.alarm_traces) {
        StatTrace tr;
        tr.first_index = report.first_index;
        tr.stat.assign(run.col(d).data(), run.col(d).data() + run.rows());
        traces.push_back(std::move(tr));
      }
      const auto grid = quantile_thresholds(traces, opt.t0, opt.threshold_count);
      const auto points = delay_vs_pfa(traces, opt.t0, horizon, grid);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (const auto& p : points) {
        if (roc_file.is_open()) {
          roc_file << report.detectors[d] << ',' << csv::format_double(p.threshold) << ','
                   << csv::format_double(p.pfa) << ',' << csv::format_double(p.pd) << '\n';
        }
        if (delay_file.is_open()) {
          delay_file << report.detectors[d] << ',' << csv::format_double(p.threshold) << ','
                     << csv::format_double(p.pfa) << ',' << csv::format_double(p.pd) << ','
                     << csv::format_double(p.mtfa.value_or(nan)) << ','
                     << csv::format_double(p.mtd.value_or(nan)) << '\n';
        }
      }
    }
  }

  std::ofstream out_file;
  std::ostream& os = open_output(opt.output, out_file);
  report.save_csv(os);
  return 0;
}

struct BenchOptionsCli {
  std::string output;
  std::vector<std::string> detectors{"nougat", "drulsif", "ma"};
  std::vector<int> dict_sizes{10, 20, 40, 80};
  int reps = 11;
  long nt = 1200;
  int dim = 6;
  int n_ref = 64;
  int n_test = 64;
  double mu = 47e-3;
  double nu = 1e-2;
  int knn_k = 10;
  std::uint64_t seed = 0;
};

int run_bench(const BenchOptionsCli& opt) {
  std::ofstream out_file;
  std::ostream& os = open_output(opt.output, out_file);
  csv::write_header(os, {"detector", "L", "median_seconds", "min_seconds", "max_seconds"});
  for (const auto& name : opt.detectors) {
    BenchConfig cfg;
    cfg.detector = detector_kind_from_name(name);
    cfg.win = WindowConfig{opt.n_ref, opt.n_test};
    cfg.dim = opt.dim;
    cfg.nougat_cfg.mu = opt.mu;
    cfg.nougat_cfg.nu = opt.nu;
    cfg.drulsif_nu = opt.nu;
    cfg.knn_cfg.k_neighbors = opt.knn_k;
    cfg.n_t = opt.nt;
    cfg.repetitions = opt.reps;
    cfg.seed = opt.seed;
    for (const auto& row : bench_runtime(cfg, opt.dict_sizes)) {
      os << name << ',' << row.dict_size << ',' << csv::format_double(row.median_seconds) << ','
         << csv::format_double(row.min_seconds) << ',' << csv::format_double(row.max_seconds)
         << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming kernel change-point detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Structured config file (INI/TOML); flags override it");

  DetectOptions d;
  auto* detect = app.add_subcommand("detect", "Run detectors over a CSV stream");
  detect->add_option("--input", d.input, "Input CSV path, or '-' for stdin")->required();
  detect->add_option("--output", d.output, "Output CSV path, or '-' for stdout");
  detect->add_option("--detector", d.detectors, "Detectors: nougat, drulsif, ma, knn, gma")
      ->delimiter(',');
  detect->add_option("--nref", d.n_ref, "Reference window length");
  detect->add_option("--ntest", d.n_test, "Test window length");
  detect->add_option("--sigma", d.sigma, "Gaussian kernel bandwidth");
  detect->add_option("--mu", d.mu, "NOUGAT step size");
  detect->add_option("--nu", d.nu, "Ridge regularization");
  detect->add_option("--xi", d.xi, "Detection threshold");
  detect->add_option("--eta0", d.eta0, "Coherence admission threshold");
  detect->add_option("--embed-k", d.embed_k, "Time-delay embedding dimension");
  detect->add_option("--seed", d.seed, "Seed (reserved for generated inputs)");
  detect->add_option("--dict", d.dict_path,
                     "Dictionary CSV: loaded if the file exists, else built online and saved");
  detect->add_option("--max-atoms", d.max_atoms, "Optional dictionary size cap (0 = none)");
  detect->add_option("--gma-alpha", d.gma_alpha, "GMA forgetting factor");
  detect->add_option("--gma-nominal", d.gma_nominal_path, "CSV with the nominal feature mean");
  detect->add_option("--knn-k", d.knn_k, "k-NN neighbor count");
  detect->add_option("--rule", d.rule, "Alarm rule for ratio detectors: shifted|centered");

  TheoryOptionsCli t;
  auto* theory = app.add_subcommand("theory", "Analytical mean/variance traces");
  theory->add_option("--output", t.output, "Output CSV path, or '-' for stdout");
  theory->add_option("--spec-json", t.spec_json, "JSON file with mu0/R0 (and mu1/R1)");
  theory->add_option("--dim", t.dim, "Data dimension for --std/--corr specs");
  theory->add_option("--std0", t.std0, "Pre-change standard deviation");
  theory->add_option("--corr0", t.corr0, "Pre-change correlation");
  theory->add_option("--std1", t.std1, "Post-change standard deviation (enables change)");
  theory->add_option("--corr1", t.corr1, "Post-change correlation");
  theory->add_option("--t0", t.t0, "Change instant (update steps)");
  theory->add_option("--horizon", t.horizon, "Trace length");
  theory->add_option("--sigma", t.sigma, "Gaussian kernel bandwidth");
  theory->add_option("--mu", t.mu, "Step size");
  theory->add_option("--nu", t.nu, "Ridge regularization");
  theory->add_option("--nref", t.n_ref, "Reference window length");
  theory->add_option("--ntest", t.n_test, "Test window length");
  theory->add_option("--L", t.dict_size, "Dictionary size when sampling");
  theory->add_option("--dict-seed", t.dict_seed, "Dictionary sampling seed");
  theory->add_option("--dict", t.dict_path, "Load dictionary CSV instead of sampling");
  theory->add_option("--theta0", t.theta0, "Initial weight (broadcast scalar)");
  theory->add_flag("--neglect-mean", t.neglect_mean, "Drop the mean path (null simplification)");
  theory->add_flag("--steady", t.steady, "Prepend steady-state variance as a comment");
  theory->add_flag("--emit-mean-vector", t.emit_mean_vector,
                   "Append the flattened mean weight vector columns");
  theory->add_option("--mc-moments", t.mc_moments_n,
                     "Estimate moments by Monte Carlo with this many draws");
  theory->add_option("--seed", t.seed, "Seed for --mc-moments");
  theory->add_option("--moments0", t.moments0_path, "Load pre-change MomentSet CSV");
  theory->add_option("--moments1", t.moments1_path, "Load post-change MomentSet CSV");
  theory->add_option("--save-moments0", t.save_moments0, "Save pre-change MomentSet CSV");
  theory->add_option("--save-moments1", t.save_moments1, "Save post-change MomentSet CSV");

  McOptionsCli m;
  auto* mc = app.add_subcommand("mc", "Monte Carlo campaign");
  mc->add_option("--output", m.output, "Output CSV path, or '-' for stdout");
  mc->add_option("--gen", m.generator, "Generator: gaussian | gmm");
  mc->add_option("--runs", m.runs, "Number of Monte Carlo runs");
  mc->add_option("--seed", m.seed, "Base seed");
  mc->add_option("--threads", m.threads, "Worker threads (0 = auto)");
  mc->add_option("--horizon", m.horizon, "Update steps per run (gaussian)");
  mc->add_option("--t0", m.t0, "Change instant");
  mc->add_option("--dim", m.dim, "Data dimension");
  mc->add_option("--std0", m.std0, "Pre-change std");
  mc->add_option("--corr0", m.corr0, "Pre-change correlation");
  mc->add_option("--std1", m.std1, "Post-change std (enables change)");
  mc->add_option("--corr1", m.corr1, "Post-change correlation");
  mc->add_option("--gmm-components", m.gmm_components, "GMM component count");
  mc->add_option("--gmm-alpha", m.gmm_alpha, "GMM Dirichlet concentration");
  mc->add_option("--nt", m.nt, "Stream length (gmm)");
  mc->add_option("--detector", m.detectors, "Detectors to run")->delimiter(',');
  mc->add_option("--sigma", m.sigma, "Kernel bandwidth (gaussian; gmm uses the median trick)");
  mc->add_option("--mu", m.mu, "Step size");
  mc->add_option("--nu", m.nu, "Ridge regularization");
  mc->add_option("--nref", m.n_ref, "Reference window length");
  mc->add_option("--ntest", m.n_test, "Test window length");
  mc->add_option("--L", m.dict_size, "Dictionary size");
  mc->add_option("--dict-seed", m.dict_seed, "Dictionary sampling seed (gaussian)");
  mc->add_option("--dict", m.dict_path, "Load dictionary CSV (gaussian)");
  mc->add_option("--theta0", m.theta0, "Initial weight (broadcast scalar)");
  mc->add_option("--knn-k", m.knn_k, "k-NN neighbor count");
  mc->add_option("--gma-alpha", m.gma_alpha, "GMA forgetting factor");
  mc->add_option("--roc-out", m.roc_out, "Write a per-detector ROC table (needs --t0)");
  mc->add_option("--delay-out", m.delay_out,
                 "Write a per-detector MTFA/MTD-vs-PFA table (needs --t0)");
  mc->add_option("--thresholds", m.threshold_count, "Threshold grid size for the tables");

  BenchOptionsCli b;
  auto* bench = app.add_subcommand("bench", "Runtime benchmark");
  bench->add_option("--output", b.output, "Output CSV path, or '-' for stdout");
  bench->add_option("--detector", b.detectors, "Detectors to time")->delimiter(',');
  bench->add_option("--L", b.dict_sizes, "Dictionary sizes")->delimiter(',');
  bench->add_option("--reps", b.reps, "Repetitions per point (median reported)");
  bench->add_option("--nt", b.nt, "Timed samples per pass");
  bench->add_option("--dim", b.dim, "Data dimension");
  bench->add_option("--nref", b.n_ref, "Reference window length");
  bench->add_option("--ntest", b.n_test, "Test window length");
  bench->add_option("--mu", b.mu, "Step size");
  bench->add_option("--nu", b.nu, "Ridge regularization");
  bench->add_option("--knn-k", b.knn_k, "k-NN neighbor count");
  bench->add_option("--seed", b.seed, "Data seed");

  try {
    app.parse(argc, argv);
    if (*detect) return run_detect(d);
    if (*theory) return run_theory(t);
    if (*mc) return run_mc(m);
    if (*bench) return run_bench(b);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
