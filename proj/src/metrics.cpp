#include "nougat/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "nougat/csv.hpp"
#include "nougat/errors.hpp"

namespace nougat {

namespace {

void require_runs(const std::vector<AlarmRecord>& records) {
  if (records.empty()) throw ValidationError("metrics: no runs");
}

}  // namespace

double pfa(const std::vector<AlarmRecord>& records) {
  require_runs(records);
  long hits = 0;
  for (const auto& r : records) {
    if (!r.alarms.empty() && r.alarms.front() < r.t0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double pd(const std::vector<AlarmRecord>& records) {
  require_runs(records);
  long hits = 0;
  for (const auto& r : records) {
    auto it = std::lower_bound(r.alarms.begin(), r.alarms.end(), r.t0);
    if (it != r.alarms.end() && *it <= r.horizon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::optional<double> mtfa(const std::vector<AlarmRecord>& records, MtfaMode mode) {
  require_runs(records);
  double sum = 0.0;
  long count = 0;
  for (const auto& r : records) {
    if (r.alarms.empty() || r.alarms.front() >= r.t0) continue;
    if (mode == MtfaMode::first_alarm) {
      sum += static_cast<double>(r.alarms.front());
      ++count;
    } else {
      for (long a : r.alarms) {
        if (a >= r.t0) break;
        sum += static_cast<double>(a);
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::optional<double> mtd(const std::vector<AlarmRecord>& records) {
  require_runs(records);
  double sum = 0.0;
  long count = 0;
  for (const auto& r : records) {
    auto it = std::lower_bound(r.alarms.begin(), r.alarms.end(), r.t0);
    if (it == r.alarms.end() || *it > r.horizon) continue;
    sum += static_cast<double>(*it - r.t0);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

AlarmRecord threshold_alarms(const StatTrace& trace, double threshold, long t0, long horizon) {
  AlarmRecord rec;
  rec.t0 = t0;
  rec.horizon = horizon;
  for (std::size_t i = 0; i < trace.stat.size(); ++i) {
    const long t = trace.first_index + static_cast<long>(i);
    if (t > horizon) break;
    if (trace.stat[i] > threshold) rec.alarms.push_back(t);
  }
  return rec;
}

RocCurve roc(const std::vector<StatTrace>& traces, long t0, long horizon,
             const std::vector<double>& thresholds) {
  if (thresholds.size() < 2) throw ValidationError("roc: need at least 2 thresholds");
  std::vector<double> sorted = thresholds;
  std::sort(sorted.begin(), sorted.end());
  RocCurve curve;
  curve.points.reserve(sorted.size());
  for (double xi : sorted) {
    std::vector<AlarmRecord> records;
    records.reserve(traces.size());
    for (const auto& tr : traces) records.push_back(threshold_alarms(tr, xi, t0, horizon));
    curve.points.push_back(RocPoint{xi, pfa(records), pd(records)});
  }
  return curve;
}

std::vector<double> quantile_thresholds(const std::vector<StatTrace>& traces, long t0, int count) {
  if (count < 2) throw ValidationError("quantile_thresholds: need at least 2");
  std::vector<double> pool;
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.stat.size(); ++i) {
      if (tr.first_index + static_cast<long>(i) < t0 && std::isfinite(tr.stat[i])) {
        pool.push_back(tr.stat[i]);
      }
    }
  }
  if (pool.empty()) throw ValidationError("quantile_thresholds: no pre-t0 statistics");
  std::sort(pool.begin(), pool.end());
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double rank = static_cast<double>(i) / static_cast<double>(count - 1);
    const std::size_t idx =
        std::min(pool.size() - 1, static_cast<std::size_t>(rank * (pool.size() - 1)));
    out.push_back(pool[idx]);
  }
  return out;
}

std::vector<DelayPoint> delay_vs_pfa(const std::vector<StatTrace>& traces, long t0, long horizon,
                                     const std::vector<double>& thresholds) {
  std::vector<double> sorted = thresholds;
  std::sort(sorted.begin(), sorted.end());
  std::vector<DelayPoint> out;
  out.reserve(sorted.size());
  for (double xi : sorted) {
    std::vector<AlarmRecord> records;
    records.reserve(traces.size());
    for (const auto& tr : traces) records.push_back(threshold_alarms(tr, xi, t0, horizon));
    DelayPoint p;
    p.threshold = xi;
    p.pfa = pfa(records);
    p.pd = pd(records);
    p.mtfa = mtfa(records);
    p.mtd = mtd(records);
    out.push_back(p);
  }
  return out;
}

void RocCurve::save_csv(std::ostream& os) const {
  csv::write_header(os, {"threshold", "pfa", "pd"});
  for (const auto& p : points) csv::write_values(os, {p.threshold, p.pfa, p.pd});
}

void RocCurve::save_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  save_csv(f);
}

void save_delay_csv(std::ostream& os, const std::vector<DelayPoint>& points) {
  csv::write_header(os, {"threshold", "pfa", "pd", "mtfa", "mtd"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : points) {
    csv::write_values(os, {p.threshold, p.pfa, p.pd, p.mtfa.value_or(nan), p.mtd.value_or(nan)});
  }
}

DetectorKind detector_kind_from_name(const std::string& name) {
  if (name == "nougat") return DetectorKind::nougat;
  if (name == "drulsif") return DetectorKind::drulsif;
  if (name == "ma") return DetectorKind::ma;
  if (name == "knn") return DetectorKind::knn;
  throw ValidationError("unknown detector '" + name + "'");
}

std::vector<BenchRow> bench_runtime(const BenchConfig& cfg, const std::vector<int>& dict_sizes) {
  if (cfg.repetitions < 3) throw ValidationError("bench: repetitions must be >= 3");
  if (cfg.n_t < 1) throw ValidationError("bench: n_t must be >= 1");
  if (dict_sizes.empty()) throw ValidationError("bench: no dictionary sizes given");

  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  rows.reserve(dict_sizes.size());

  const int warm = cfg.win.n_ref + cfg.win.n_test;
  Rng rng(cfg.seed);
  std::vector<Eigen::VectorXd> prefill, timed;
  prefill.reserve(warm);
  timed.reserve(cfg.n_t);
  for (int i = 0; i < warm; ++i) prefill.push_back(rng.normal_vector(cfg.dim));
  for (long i = 0; i < cfg.n_t; ++i) timed.push_back(rng.normal_vector(cfg.dim));

  for (int l : dict_sizes) {
    std::vector<Eigen::VectorXd> atoms;
    atoms.reserve(l);
    for (int i = 0; i < l; ++i) atoms.push_back(rng.normal_vector(cfg.dim));
    const Dictionary dict = Dictionary::from_atoms(atoms, KernelParams{1.0});

    std::vector<double> seconds;
    seconds.reserve(cfg.repetitions);
    double sink = 0.0;  // keeps the measured work observable
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      WindowStats stats(cfg.win, dict);
      for (const auto& y : prefill) stats.push(y, dict);
      NougatDetector ng(cfg.nougat_cfg, dict.size());

      const auto start = clock::now();
      switch (cfg.detector) {
        case DetectorKind::nougat:
          for (const auto& y : timed) {
            stats.push(y, dict);
            ng.step(stats);
            sink += ng.statistic();
          }
          break;
        case DetectorKind::drulsif:
          for (const auto& y : timed) {
            stats.push(y, dict);
            sink += drulsif_solve(stats, cfg.drulsif_nu).dot(stats.h_test());
          }
          break;
        case DetectorKind::ma:
          for (const auto& y : timed) {
            stats.push(y, dict);
            sink += ma_statistic(stats);
          }
          break;
        case DetectorKind::knn:
          for (const auto& y : timed) {
            stats.push(y, dict);
            sink += knn_statistic(stats.ordered_samples(), cfg.win.n_ref, cfg.win.n_test,
                                  cfg.knn_cfg);
          }
          break;
      }
      const auto stop = clock::now();
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    if (!std::isfinite(sink)) throw NumericalError("bench: non-finite statistic");
    std::sort(seconds.begin(), seconds.end());
    const std::size_t n = seconds.size();
    const double median =
        n % 2 == 1 ? seconds[n / 2] : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
    rows.push_back(BenchRow{l, median, seconds.front(), seconds.back()});
  }
  return rows;
}

void save_bench_csv(std::ostream& os, const std::string& detector,
                    const std::vector<BenchRow>& rows) {
  csv::write_header(os, {"detector", "L", "median_seconds"});
  for (const auto& r : rows) {
    os << detector << ',' << r.dict_size << ',' << csv::format_double(r.median_seconds) << '\n';
  }
}

}  // namespace nougat
