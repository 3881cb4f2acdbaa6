#pragma once

#include <cstdint>
#include <vector>

#include "dynwatch/case_io.hpp"
#include "dynwatch/detector.hpp"
#include "dynwatch/simulator.hpp"

namespace dynwatch {

struct EvalReport {
  double auc = 0.0;
  double f_measure = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int top_k = 0;
  double detect_seconds = 0.0;
  double per_tick_per_sensor_ms = 0.0;
};

// Probability of ranking a random positive above a random negative; ties
// count one half. Throws when either class is empty.
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);

// Predictions = top-k scores, ties at the cut broken by earlier tick.
double f_measure_topk(const std::vector<double>& scores, const std::vector<bool>& labels, int k,
                      double* precision_out = nullptr, double* recall_out = nullptr);

EvalReport evaluate_scores(const ScoreSeries& scores, const std::vector<Label>& labels, int top_k);

// Runs the detector on a scenario and evaluates against its labels; timing
// covers the detect loop only.
EvalReport run_detection(const Scenario& scenario, const DetectorConfig& config, int top_k);

// Same pipeline with weights forced uniform (topology-blind baseline).
EvalReport ablation_uniform(const Scenario& scenario, DetectorConfig config, int top_k);

// --- scalability -------------------------------------------------------

// Duplicates the case `factor` times; each copy's buses connect to their
// counterparts in the previous copy, so edges = k*E + (k-1)*V.
CaseFile duplicate_case(const CaseFile& base, int factor);

// Random connected meshed case (ring plus chords) for desk-scale benches.
CaseFile make_synthetic_case(int n_buses, int n_branches, std::uint64_t seed);

struct BenchRow {
  int factor = 0;
  int edges = 0;
  int buses = 0;
  double detect_seconds = 0.0;
  double per_tick_per_sensor_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double slope = 0.0;      // seconds per edge
  double intercept = 0.0;  // seconds
  double r2 = 0.0;
};

BenchReport scale_bench(const CaseFile& base, const std::vector<int>& factors, const ScenarioSpec& proto,
                        const DetectorConfig& config);

// --- statistical-error validation ---------------------------------------

struct TheoremTrialSpec {
  int history_len = 10;  // T
  double sigma = 1.0;
  double bias_const = 0.5;        // c
  std::vector<double> d_star;     // optimal distances, size T
  std::vector<int> bias_sign;     // +-1 per tick
  double mu_target = 0.0;         // mu_{T+1}
  long n_trials = 100000;
  std::uint64_t seed = 1;
};

struct TheoremTrialResult {
  double mse = 0.0;
  double se = 0.0;  // standard error of the MSE estimate
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double max_weight = 0.0;
  double max_cd = 0.0;  // c * max d*
  bool pass = false;
};

TheoremTrialResult run_theorem_trial(const TheoremTrialSpec& spec);

struct TrendPoint {
  int history_len = 0;
  double mse = 0.0;
  double se = 0.0;
};

struct TheoremValidationReport {
  std::vector<TheoremTrialResult> bound_trials;
  TheoremTrialResult single_tick;        // T = 1, d* = 0: MSE ~ 2 sigma^2
  std::vector<TrendPoint> trend;         // shared-noise prefix MSEs, d* = 0
  double trend_sigma = 1.0;
  double estimator_mean = 0.0;           // mean of sum w x at the largest T
  double estimator_mean_se = 0.0;
  bool bounds_pass = false;
  bool exact_pass = false;    // every trend point within 1% of sigma^2 (1 + 1/T)
  bool monotone_pass = false;
  bool unbiased_pass = false;
  bool all_pass = false;
};

TheoremValidationReport validate_theorems(long n_trials, std::uint64_t seed, int threads);

// Least-squares fit helpers shared by the bench report.
void linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& intercept,
                double& r2);

}  // namespace dynwatch
