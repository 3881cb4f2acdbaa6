#include "dynwatch/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynwatch {

TickDistances extend_to_ticks(const TopologySeries& series, const Topology& current, DistanceMeasure measure,
                              SensitivityCache& cache, std::optional<int> sensor, double scale_factor,
                              double islanding_penalty) {
  TickDistances out;
  out.scale_factor = scale_factor;
  out.raw.resize(static_cast<size_t>(series.tick_count()));
  for (const TopologySegment& seg : series.segments()) {
    DistanceRequest req;
    req.topo_a = seg.topology;
    req.topo_b = current;
    req.measure = sensor.has_value() ? DistanceMeasure::lodf_local : measure;
    req.sensor = sensor;
    req.islanding_penalty = islanding_penalty;
    double d = distance(req, cache);
    for (int t = seg.tick_start; t <= seg.tick_end; ++t) {
      out.raw[static_cast<size_t>(t - 1)] = d;
    }
  }
  out.scaled = normalize_scale(out.raw, scale_factor);
  return out;
}

std::vector<double> normalize_scale(const std::vector<double>& d, double scale_factor) {
  double mx = 0.0;
  for (double v : d) {
    if (v < 0) throw DataError("negative distance in normalize_scale");
    mx = std::max(mx, v);
  }
  std::vector<double> out(d.size());
  if (mx == 0.0) {
    std::copy(d.begin(), d.end(), out.begin());
    return out;
  }
  for (size_t i = 0; i < d.size(); ++i) out[i] = scale_factor * d[i] / mx;
  return out;
}

WeightVector compute_weights(const std::vector<double>& d_scaled) {
  size_t n = d_scaled.size();
  if (n == 0) throw DataError("compute_weights: empty distance vector");
  for (double v : d_scaled) {
    if (v < 0) throw DataError("compute_weights: negative distance");
  }
  std::vector<double> sorted(d_scaled);
  std::sort(sorted.begin(), sorted.end());

  // sum_t max(lambda - d_t, 0) = 1 is piecewise linear and increasing in
  // lambda; with the k smallest entries active, lambda = (1 + prefix_k) / k.
  // The solution uses the largest k whose lambda stays above its k-th
  // smallest distance.
  double prefix = 0.0;
  double lambda = 0.0;
  for (size_t j = 1; j <= n; ++j) {
    prefix += sorted[j - 1];
    double cand = (1.0 + prefix) / static_cast<double>(j);
    if (cand > sorted[j - 1]) {
      lambda = cand;
    } else {
      break;
    }
  }

  WeightVector out;
  out.lambda_star = lambda;
  out.w.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.w[i] = std::max(lambda - d_scaled[i], 0.0);
  }
  return out;
}

double weighting_objective(const std::vector<double>& d, const std::vector<double>& w) {
  double obj = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    obj += d[i] * w[i] + 0.5 * w[i] * w[i];
  }
  return obj;
}

}  // namespace dynwatch
