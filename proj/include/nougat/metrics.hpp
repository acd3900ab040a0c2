#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nougat/simgen.hpp"

namespace nougat {

// Alarm instants of one run, sorted ascending; t0 is the change instant and
// horizon the last observed index (same clock as the instants).
struct AlarmRecord {
  std::vector<long> alarms;
  long t0 = 0;
  long horizon = 0;
};

// Fraction of runs with at least one alarm strictly before t0.
double pfa(const std::vector<AlarmRecord>& records);

// Fraction of runs with at least one alarm in [t0, horizon].
double pd(const std::vector<AlarmRecord>& records);

enum class MtfaMode { first_alarm, all_alarms };

// Mean first-alarm instant over runs whose first alarm precedes t0
// (all_alarms: mean over every pre-t0 alarm instead). Absent when no run
// qualifies.
std::optional<double> mtfa(const std::vector<AlarmRecord>& records,
                           MtfaMode mode = MtfaMode::first_alarm);

// Mean of (first alarm at or after t0) - t0 over runs that have one.
std::optional<double> mtd(const std::vector<AlarmRecord>& records);

// Per-run alarm-statistic trace; stat[i] belongs to instant first_index + i.
struct StatTrace {
  long first_index = 0;
  std::vector<double> stat;
};

AlarmRecord threshold_alarms(const StatTrace& trace, double threshold, long t0, long horizon);

struct RocPoint {
  double threshold = 0.0;
  double pfa = 0.0;
  double pd = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by threshold ascending

  void save_csv(std::ostream& os) const;
  void save_csv_file(const std::string& path) const;
};

RocCurve roc(const std::vector<StatTrace>& traces, long t0, long horizon,
             const std::vector<double>& thresholds);

// Empirical quantiles of the pooled pre-t0 statistics; default ROC grid.
std::vector<double> quantile_thresholds(const std::vector<StatTrace>& traces, long t0, int count);

// MTFA/MTD as a function of the operating point (one row per threshold).
struct DelayPoint {
  double threshold = 0.0;
  double pfa = 0.0;
  double pd = 0.0;
  std::optional<double> mtfa;
  std::optional<double> mtd;
};

std::vector<DelayPoint> delay_vs_pfa(const std::vector<StatTrace>& traces, long t0, long horizon,
                                     const std::vector<double>& thresholds);

void save_delay_csv(std::ostream& os, const std::vector<DelayPoint>& points);

// ---------------------------------------------------------------------------
// Runtime benchmark.

enum class DetectorKind { nougat, drulsif, ma, knn };

DetectorKind detector_kind_from_name(const std::string& name);

struct BenchConfig {
  DetectorKind detector = DetectorKind::nougat;
  WindowConfig win;
  int dim = 6;
  NougatConfig nougat_cfg;
  double drulsif_nu = 1e-2;
  KnnConfig knn_cfg;
  long n_t = 1200;       // timed samples per pass
  int repetitions = 11;  // >= 3
  std::uint64_t seed = 0;
};

struct BenchRow {
  int dict_size = 0;
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
};

// Median wall time of a full n_t-sample pass per dictionary size. Windows
// are pre-filled before timing starts so the measurement reflects the
// steady-state per-sample cost.
std::vector<BenchRow> bench_runtime(const BenchConfig& cfg, const std::vector<int>& dict_sizes);

void save_bench_csv(std::ostream& os, const std::string& detector,
                    const std::vector<BenchRow>& rows);

}  // namespace nougat
