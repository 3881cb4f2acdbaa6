#pragma once

#include <optional>
#include <vector>

#include "dynwatch/distance.hpp"
#include "dynwatch/grid.hpp"

namespace dynwatch {

inline constexpr double kDefaultScaleFactor = 0.005;

struct TickDistances {
  std::vector<double> raw;     // d_t per tick, t = 1..N
  std::vector<double> scaled;  // normalized + scaled input to the solver
  double scale_factor = kDefaultScaleFactor;
};

struct WeightVector {
  std::vector<double> w;
  double lambda_star = 0.0;
};

// d_t = D(G(t), current) per tick of `series`, computed once per distinct
// segment and broadcast. Local mode when `sensor` is set.
TickDistances extend_to_ticks(const TopologySeries& series, const Topology& current, DistanceMeasure measure,
                              SensitivityCache& cache, std::optional<int> sensor = std::nullopt,
                              double scale_factor = kDefaultScaleFactor, double islanding_penalty = 1.0);

// max-normalizes then multiplies by scale_factor; zero vector passes through.
std::vector<double> normalize_scale(const std::vector<double>& d, double scale_factor);

// Solves min_w  d.w + 0.5 w.w  s.t.  sum w = 1, w >= 0 exactly via the
// breakpoint scan; w_t = max(lambda* - d_t, 0).
WeightVector compute_weights(const std::vector<double>& d_scaled);

double weighting_objective(const std::vector<double>& d, const std::vector<double>& w);

}  // namespace dynwatch
