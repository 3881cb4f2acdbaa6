#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dynwatch/dc.hpp"
#include "dynwatch/distance.hpp"
#include "dynwatch/scenario.hpp"
#include "dynwatch/weighting.hpp"

namespace dynwatch {

struct MetricTriple {
  double edge = 0.0;  // max line-flow change magnitude on adjacent lines
  double ave = 0.0;   // mean magnitude
  double div = 0.0;   // population std of the magnitudes
};

enum class DetectorMode { global, local };

struct DetectorConfig {
  int window = 0;  // history cap in ticks; 0 = everything since the start
  double scale_factor = kDefaultScaleFactor;
  DetectorMode mode = DetectorMode::global;
  std::optional<double> tau;  // alarm threshold; unset = ranking-only
  double iqr_floor = 1e-6;
  int top_k = 3;
  double islanding_penalty = 1.0;
  bool uniform_weights = false;  // topology-blind ablation baseline
};

// Delta of one sensor's readings between consecutive frames under the tick-t
// adjacency; a branch inactive at t-1 contributes its full present value.
std::vector<SensorReading> sensor_deltas(const std::vector<SensorReading>& now,
                                         const std::vector<SensorReading>& prev,
                                         const std::vector<int>& adjacency);

// Metric triple over the per-line magnitudes |dp| + |dq|.
MetricTriple metrics(const std::vector<SensorReading>& deltas);

// Lower-step weighted quantile: smallest value whose cumulative weight share
// (sorted by value) reaches q. Weights need not be pre-normalized but must
// be non-negative with a positive total.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);
double weighted_median(std::span<const double> values, std::span<const double> weights);
double weighted_iqr(std::span<const double> values, std::span<const double> weights);

struct SensorScoreResult {
  double score = 0.0;
  bool warmup = false;
};

// a_i(t): worst metric deviation from its weighted median in units of the
// floored weighted IQR. History spans are aligned with `weights`.
SensorScoreResult score_sensor(std::span<const double> hist_edge, std::span<const double> hist_ave,
                               std::span<const double> hist_div, std::span<const double> weights,
                               const MetricTriple& current, const DetectorConfig& config);

ScoreSeries detect(const Scenario& scenario, const DetectorConfig& config);
ScoreSeries detect(const Scenario& scenario, const DetectorConfig& config, SensitivityCache& cache);

}  // namespace dynwatch
