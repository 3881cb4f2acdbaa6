#include "dynwatch/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dynwatch {

std::vector<SensorReading> sensor_deltas(const std::vector<SensorReading>& now,
                                         const std::vector<SensorReading>& prev,
                                         const std::vector<int>& adjacency) {
  std::vector<SensorReading> out;
  out.reserve(adjacency.size());
  auto find_in = [](const std::vector<SensorReading>& frame, int branch) -> const SensorReading* {
    for (const SensorReading& r : frame) {
      if (r.branch == branch) return &r;
    }
    return nullptr;
  };
  for (int branch : adjacency) {
    const SensorReading* cur = find_in(now, branch);
    const SensorReading* old = find_in(prev, branch);
    SensorReading d;
    d.branch = branch;
    d.p = (cur ? cur->p : 0.0) - (old ? old->p : 0.0);
    d.q = (cur ? cur->q : 0.0) - (old ? old->q : 0.0);
    out.push_back(d);
  }
  return out;
}

MetricTriple metrics(const std::vector<SensorReading>& deltas) {
  if (deltas.empty()) {
    throw DataError("metrics: sensor has no adjacent line (sensor blind)");
  }
  MetricTriple m;
  double sum = 0.0;
  for (const SensorReading& d : deltas) {
    double mag = std::abs(d.p) + std::abs(d.q);
    m.edge = std::max(m.edge, mag);
    sum += mag;
  }
  m.ave = sum / static_cast<double>(deltas.size());
  double var = 0.0;
  for (const SensorReading& d : deltas) {
    double mag = std::abs(d.p) + std::abs(d.q);
    var += (mag - m.ave) * (mag - m.ave);
  }
  m.div = std::sqrt(var / static_cast<double>(deltas.size()));
  return m;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  if (values.size() != weights.size() || values.empty()) {
    throw DataError("weighted_quantile: values/weights size mismatch or empty");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0) throw DataError("weighted_quantile: negative weight");
    total += w;
  }
  if (!(total > 0)) throw DataError("weighted_quantile: all weights zero");

  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });

  double cum = 0.0;
  double threshold = q * total;
  for (size_t i : order) {
    cum += weights[i];
    if (cum >= threshold) return values[i];
  }
  return values[order.back()];
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  return weighted_quantile(values, weights, 0.5);
}

double weighted_iqr(std::span<const double> values, std::span<const double> weights) {
  return weighted_quantile(values, weights, 0.75) - weighted_quantile(values, weights, 0.25);
}

SensorScoreResult score_sensor(std::span<const double> hist_edge, std::span<const double> hist_ave,
                               std::span<const double> hist_div, std::span<const double> weights,
                               const MetricTriple& current, const DetectorConfig& config) {
  int positive = 0;
  for (double w : weights) {
    if (w > 0) ++positive;
  }
  if (positive < 2) return SensorScoreResult{0.0, true};

  auto one = [&](std::span<const double> hist, double now) {
    double mu = weighted_median(hist, weights);
    double iqr = weighted_iqr(hist, weights);
    return (now - mu) / std::max(iqr, config.iqr_floor);
  };
  double score = one(hist_edge, current.edge);
  score = std::max(score, one(hist_ave, current.ave));
  score = std::max(score, one(hist_div, current.div));
  return SensorScoreResult{score, false};
}

namespace {

// Sorted-by-value metric history with tick tags, so per-tick weighted
// quantiles are one linear pass instead of a fresh sort.
class MetricHistory {
 public:
  void add(double value, int tick) {
    Entry e{value, tick};
    auto it = std::upper_bound(entries_.begin(), entries_.end(), e,
                               [](const Entry& a, const Entry& b) { return a.value < b.value; });
    entries_.insert(it, e);
  }

  // Quantiles at 0.25/0.5/0.75 under per-tick weights (0 outside window).
  // `total` is the weight sum; entries with zero weight are skipped.
  void quartiles(const std::vector<double>& weight_by_tick, double total, double& q25, double& q50,
                 double& q75) const {
    double cum = 0.0;
    double t25 = 0.25 * total, t50 = 0.5 * total, t75 = 0.75 * total;
    bool h25 = false, h50 = false, h75 = false;
    q25 = q50 = q75 = entries_.empty() ? 0.0 : entries_.back().value;
    for (const Entry& e : entries_) {
      double w = weight_by_tick[static_cast<size_t>(e.tick)];
      if (w <= 0) continue;
      cum += w;
      if (!h25 && cum >= t25) {
        q25 = e.value;
        h25 = true;
      }
      if (!h50 && cum >= t50) {
        q50 = e.value;
        h50 = true;
      }
      if (!h75 && cum >= t75) {
        q75 = e.value;
        h75 = true;
        break;
      }
    }
  }

 private:
  struct Entry {
    double value;
    int tick;
  };
  std::vector<Entry> entries_;
};

struct PairKey {
  int a, b, sensor;
  bool operator<(const PairKey& o) const {
    return std::tie(a, b, sensor) < std::tie(o.a, o.b, o.sensor);
  }
};

}  // namespace

ScoreSeries detect(const Scenario& scenario, const DetectorConfig& config) {
  SensitivityCache cache;
  return detect(scenario, config, cache);
}

ScoreSeries detect(const Scenario& scenario, const DetectorConfig& config, SensitivityCache& cache) {
  const int ticks = scenario.measurements.tick_count;
  if (ticks < 2) throw DataError("detect: need at least 2 ticks");
  if (scenario.series.tick_count() != ticks) {
    throw DataError("detect: topology series covers " + std::to_string(scenario.series.tick_count()) +
                    " ticks but measurements cover " + std::to_string(ticks) + " (tick-count mismatch)");
  }
  const int n_sensors = scenario.sensors.count();
  const bool local = config.mode == DetectorMode::local;

  // Per-tick metric triples, ticks 2..T. Adjacency follows the reference
  // topology of each tick.
  std::vector<std::vector<MetricTriple>> triple(static_cast<size_t>(ticks + 1),
                                                std::vector<MetricTriple>(static_cast<size_t>(n_sensors)));
  std::vector<std::vector<bool>> blind(static_cast<size_t>(ticks + 1),
                                       std::vector<bool>(static_cast<size_t>(n_sensors), false));
  for (int t = 2; t <= ticks; ++t) {
    const Topology& topo = scenario.series.at_tick(t);
    for (int s = 0; s < n_sensors; ++s) {
      int bus = scenario.sensors.sensor_buses[static_cast<size_t>(s)];
      std::vector<int> adj = adjacent_branches(topo, bus);
      if (adj.empty()) {
        blind[static_cast<size_t>(t)][static_cast<size_t>(s)] = true;
        continue;
      }
      std::vector<SensorReading> d =
          sensor_deltas(scenario.measurements.at(t, s), scenario.measurements.at(t - 1, s), adj);
      triple[static_cast<size_t>(t)][static_cast<size_t>(s)] = metrics(d);
    }
  }

  // Distance between two segments' topologies, memoized; symmetric.
  std::map<PairKey, double> seg_distance;
  auto segment_distance = [&](int seg_hist, int seg_cur, int sensor_bus) {
    PairKey key{std::min(seg_hist, seg_cur), std::max(seg_hist, seg_cur), sensor_bus};
    auto it = seg_distance.find(key);
    if (it != seg_distance.end()) return it->second;
    DistanceRequest req;
    req.topo_a = scenario.series.segment(seg_hist).topology;
    req.topo_b = scenario.series.segment(seg_cur).topology;
    req.measure = sensor_bus >= 0 ? DistanceMeasure::lodf_local : DistanceMeasure::lodf;
    if (sensor_bus >= 0) req.sensor = sensor_bus;
    req.islanding_penalty = config.islanding_penalty;
    double d = distance(req, cache);
    seg_distance[key] = d;
    return d;
  };

  std::vector<MetricHistory> hist_edge(static_cast<size_t>(n_sensors)),
      hist_ave(static_cast<size_t>(n_sensors)), hist_div(static_cast<size_t>(n_sensors));
  std::vector<std::vector<int>> present_ticks(static_cast<size_t>(n_sensors));

  ScoreSeries out;
  out.ticks.resize(static_cast<size_t>(ticks));

  // Weight vector indexed by tick (1..T), rebuilt per scored tick.
  std::vector<double> weight_by_tick(static_cast<size_t>(ticks + 1), 0.0);
  std::vector<double> dist_buf;

  auto build_weights = [&](int h0, int h1, int seg_cur, int sensor_bus) {
    int n = h1 - h0 + 1;
    dist_buf.assign(static_cast<size_t>(n), 0.0);
    for (int t = h0; t <= h1; ++t) {
      int seg = scenario.series.segment_index_at(t);
      dist_buf[static_cast<size_t>(t - h0)] = segment_distance(seg, seg_cur, sensor_bus);
    }
    std::fill(weight_by_tick.begin(), weight_by_tick.end(), 0.0);
    if (config.uniform_weights) {
      double w = 1.0 / static_cast<double>(n);
      for (int t = h0; t <= h1; ++t) weight_by_tick[static_cast<size_t>(t)] = w;
      return;
    }
    std::vector<double> scaled = normalize_scale(dist_buf, config.scale_factor);
    WeightVector wv = compute_weights(scaled);
    for (int t = h0; t <= h1; ++t) {
      weight_by_tick[static_cast<size_t>(t)] = wv.w[static_cast<size_t>(t - h0)];
    }
  };

  for (int t = 1; t <= ticks; ++t) {
    TickScore& ts = out.ticks[static_cast<size_t>(t - 1)];
    ts.tick = t;

    int h1 = t - 1;
    int h0 = config.window > 0 ? std::max(2, t - config.window) : 2;
    bool scoreable = t >= 3 && h1 >= h0;

    if (scoreable) {
      int seg_cur = scenario.series.segment_index_at(t);
      std::vector<std::pair<int, double>> per_sensor(static_cast<size_t>(n_sensors));
      bool any_scored = false;

      if (!local) build_weights(h0, h1, seg_cur, -1);

      for (int s = 0; s < n_sensors; ++s) {
        int bus = scenario.sensors.sensor_buses[static_cast<size_t>(s)];
        per_sensor[static_cast<size_t>(s)] = {bus, 0.0};
        if (blind[static_cast<size_t>(t)][static_cast<size_t>(s)]) continue;
        if (local) build_weights(h0, h1, seg_cur, bus);

        // Weight mass landing on ticks this sensor actually has metrics for.
        double sensor_total = 0.0;
        int sensor_positive = 0;
        for (int tk : present_ticks[static_cast<size_t>(s)]) {
          double w = weight_by_tick[static_cast<size_t>(tk)];
          if (w > 0) {
            sensor_total += w;
            ++sensor_positive;
          }
        }
        if (sensor_positive < 2) continue;  // insufficient weighted history: warm-up

        const MetricTriple& cur = triple[static_cast<size_t>(t)][static_cast<size_t>(s)];
        double q25, q50, q75;
        double score = -std::numeric_limits<double>::infinity();
        hist_edge[static_cast<size_t>(s)].quartiles(weight_by_tick, sensor_total, q25, q50, q75);
        score = std::max(score, (cur.edge - q50) / std::max(q75 - q25, config.iqr_floor));
        hist_ave[static_cast<size_t>(s)].quartiles(weight_by_tick, sensor_total, q25, q50, q75);
        score = std::max(score, (cur.ave - q50) / std::max(q75 - q25, config.iqr_floor));
        hist_div[static_cast<size_t>(s)].quartiles(weight_by_tick, sensor_total, q25, q50, q75);
        score = std::max(score, (cur.div - q50) / std::max(q75 - q25, config.iqr_floor));

        per_sensor[static_cast<size_t>(s)].second = score;
        any_scored = true;
      }

      if (any_scored) {
        double a = -std::numeric_limits<double>::infinity();
        for (const auto& [bus, sc] : per_sensor) a = std::max(a, sc);
        ts.score = a;
        ts.warmup = false;
        std::stable_sort(per_sensor.begin(), per_sensor.end(), [](const auto& x, const auto& y) {
          if (x.second != y.second) return x.second > y.second;
          return x.first < y.first;
        });
        int k = std::min<int>(config.top_k, n_sensors);
        for (int i = 0; i < k; ++i) {
          ts.top.push_back(SensorScore{per_sensor[static_cast<size_t>(i)].first,
                                       per_sensor[static_cast<size_t>(i)].second});
        }
      } else {
        ts.score = 0.0;
        ts.warmup = true;
      }
    } else {
      ts.score = 0.0;
      ts.warmup = true;
    }

    if (config.tau.has_value()) ts.alarm = !ts.warmup && ts.score > *config.tau;

    // Fold tick t's metrics into the history before moving on.
    if (t >= 2) {
      for (int s = 0; s < n_sensors; ++s) {
        if (blind[static_cast<size_t>(t)][static_cast<size_t>(s)]) continue;
        const MetricTriple& m = triple[static_cast<size_t>(t)][static_cast<size_t>(s)];
        hist_edge[static_cast<size_t>(s)].add(m.edge, t);
        hist_ave[static_cast<size_t>(s)].add(m.ave, t);
        hist_div[static_cast<size_t>(s)].add(m.div, t);
        present_ticks[static_cast<size_t>(s)].push_back(t);
      }
    }
  }
  return out;
}

}  // namespace dynwatch
