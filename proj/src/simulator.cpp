#include "dynwatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "dynwatch/dc.hpp"

namespace dynwatch {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream per purpose/tick so tick generation can run in any
// order without changing the output.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ tag) + index));
}

constexpr std::uint64_t kTagSchedule = 0x5343484544ull;  // "SCHED"
constexpr std::uint64_t kTagSensors = 0x53454e53ull;     // "SENS"
constexpr std::uint64_t kTagAnomaly = 0x414e4f4dull;     // "ANOM"
constexpr std::uint64_t kTagOutage = 0x4f555447ull;      // "OUTG"
constexpr std::uint64_t kTagLoad = 0x4c4f4144ull;        // "LOAD"
constexpr std::uint64_t kTagMeas = 0x4d454153ull;        // "MEAS"

}  // namespace

AnomalyKind parse_anomaly_kind(const std::string& name) {
  if (name == "hidden_outage" || name == "hidden-outage") return AnomalyKind::hidden_outage;
  if (name == "fdia_load_scale" || name == "fdia") return AnomalyKind::fdia_load_scale;
  throw DataError("unknown anomaly kind '" + name + "'");
}

std::string anomaly_kind_name(AnomalyKind k) {
  return k == AnomalyKind::hidden_outage ? "hidden_outage" : "fdia_load_scale";
}

TopologySeries build_topology_schedule(const ScenarioSpec& spec, GridPtr grid) {
  Topology base = full_topology(grid);
  require_connected(base, "topology schedule");
  std::vector<int> bridges = bridge_branches(base);
  std::vector<int> eligible;
  for (const Branch& br : grid->branches()) {
    if (base.is_active(br.id) && !std::binary_search(bridges.begin(), bridges.end(), br.id)) {
      eligible.push_back(br.id);
    }
  }
  if (eligible.empty()) {
    throw DataError("grid has no non-bridge branch to deactivate");
  }
  std::mt19937_64 rng = stream(spec.rng_seed, kTagSchedule);
  std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
  std::vector<TopologySegment> segments;
  for (int i = 0; i < spec.n_topologies; ++i) {
    TopologySegment seg;
    seg.tick_start = i * spec.ticks_per_topology + 1;
    seg.tick_end = (i + 1) * spec.ticks_per_topology;
    seg.topology = topology_without(grid, {eligible[pick(rng)]});
    segments.push_back(std::move(seg));
  }
  return TopologySeries(std::move(segments));
}

std::vector<double> synth_loads(const ScenarioSpec& spec, const Grid& grid, int tick) {
  int total = spec.total_ticks();
  double amplitude = spec.load_variation_pct / 100.0;
  double daily = std::sin(2.0 * M_PI * static_cast<double>(tick - 1) / std::max(1, total));
  std::mt19937_64 rng = stream(spec.rng_seed, kTagLoad, static_cast<std::uint64_t>(tick));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  std::vector<double> loads(static_cast<size_t>(grid.bus_count()), 0.0);
  for (const Bus& b : grid.buses()) {
    double eps = spec.noise_sigma > 0 ? noise(rng) : 0.0;
    loads[static_cast<size_t>(b.id)] = b.pd * (1.0 + amplitude * daily) * (1.0 + eps);
  }
  return loads;
}

Scenario simulate(const ScenarioSpec& spec, GridPtr grid) {
  if (spec.n_topologies < 1 || spec.ticks_per_topology < 1) {
    throw DataError("scenario needs at least one topology segment with at least one tick");
  }
  int total = spec.total_ticks();
  if (spec.n_anomalies < 0 || spec.n_anomalies >= total) {
    throw DataError("n_anomalies must be in [0, total ticks)");
  }
  if (!(spec.fdia_scale > 0.0 && spec.fdia_scale < 1.0)) {
    throw DataError("fdia_scale must lie in (0, 1)");
  }
  if (spec.noise_sigma < 0) throw DataError("noise_sigma must be >= 0");
  if (spec.anomaly_duration_ticks < 1) throw DataError("anomaly duration must be >= 1");

  Scenario sc;
  sc.grid = grid;
  sc.series = build_topology_schedule(spec, grid);

  // Sensors: explicit list, or a seeded random subset of buses.
  if (!spec.sensor_buses.empty()) {
    for (int b : spec.sensor_buses) {
      if (b < 0 || b >= grid->bus_count()) throw DataError("sensor bus " + std::to_string(b) + " unknown");
    }
    sc.sensors.sensor_buses = spec.sensor_buses;
  } else {
    int want = spec.n_sensors > 0 ? spec.n_sensors : std::min(10, grid->bus_count());
    if (want > grid->bus_count()) throw DataError("more sensors than buses");
    std::vector<int> all(static_cast<size_t>(grid->bus_count()));
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng = stream(spec.rng_seed, kTagSensors);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<size_t>(want));
    std::sort(all.begin(), all.end());
    sc.sensors.sensor_buses = all;
  }

  // Anomaly onsets: never on the first tick of a segment, and an event must
  // fit inside its segment so labels stay unambiguous.
  std::vector<int> onsets;
  if (spec.n_anomalies > 0) {
    std::vector<int> eligible;
    for (int t = 1; t <= total; ++t) {
      if (sc.series.is_segment_start(t)) continue;
      int seg = sc.series.segment_index_at(t);
      if (t + spec.anomaly_duration_ticks - 1 > sc.series.segment(seg).tick_end) continue;
      eligible.push_back(t);
    }
    if (static_cast<int>(eligible.size()) < spec.n_anomalies) {
      throw DataError("not enough eligible ticks for the requested anomaly count");
    }
    std::mt19937_64 rng = stream(spec.rng_seed, kTagAnomaly);
    std::shuffle(eligible.begin(), eligible.end(), rng);
    eligible.resize(static_cast<size_t>(spec.n_anomalies));
    std::sort(eligible.begin(), eligible.end());
    onsets = std::move(eligible);
  }

  // Hidden-outage true topologies: segment topology minus one extra
  // non-bridge branch, resampled if the deletion would island the grid.
  std::vector<int> anomaly_at(static_cast<size_t>(total + 1), -1);  // onset index per tick, -1 none
  std::vector<Topology> event_topology(onsets.size());
  for (size_t e = 0; e < onsets.size(); ++e) {
    int onset = onsets[e];
    for (int dt = 0; dt < spec.anomaly_duration_ticks; ++dt) {
      anomaly_at[static_cast<size_t>(onset + dt)] = static_cast<int>(e);
    }
    if (spec.anomaly_kind == AnomalyKind::hidden_outage) {
      const Topology& seg_topo = sc.series.at_tick(onset);
      std::vector<int> bridges = bridge_branches(seg_topo);
      std::vector<int> candidates;
      for (const Branch& br : grid->branches()) {
        if (seg_topo.is_active(br.id) && !std::binary_search(bridges.begin(), bridges.end(), br.id)) {
          candidates.push_back(br.id);
        }
      }
      if (candidates.empty()) throw DataError("no non-bridge branch available for hidden outage");
      std::mt19937_64 rng = stream(spec.rng_seed, kTagOutage, static_cast<std::uint64_t>(onset));
      std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
      Topology t = seg_topo;
      t.active[static_cast<size_t>(candidates[pick(rng)])] = 0;
      event_topology[e] = std::move(t);
    }
  }

  double total_gen_base = 0.0;
  for (const Bus& b : grid->buses()) total_gen_base += b.pg;
  if (!(total_gen_base > 0)) throw DataError("case has no generation");

  SensitivityCache cache(128);
  MeasurementTable table;
  table.tick_count = total;
  table.frames.assign(static_cast<size_t>(total),
                      std::vector<std::vector<SensorReading>>(static_cast<size_t>(sc.sensors.count())));
  sc.labels.assign(static_cast<size_t>(total), Label{});

  for (int t = 1; t <= total; ++t) {
    Label& label = sc.labels[static_cast<size_t>(t - 1)];
    label.tick = t;
    label.kind = "none";
    int event = anomaly_at[static_cast<size_t>(t)];
    bool fdia = false;
    const Topology* true_topo = &sc.series.at_tick(t);
    if (event >= 0) {
      label.is_anomaly = true;
      label.kind = anomaly_kind_name(spec.anomaly_kind);
      if (spec.anomaly_kind == AnomalyKind::hidden_outage) {
        true_topo = &event_topology[static_cast<size_t>(event)];
      } else {
        fdia = true;
      }
    }

    std::vector<double> loads = synth_loads(spec, *grid, t);
    double total_load = std::accumulate(loads.begin(), loads.end(), 0.0);
    double gen_scale = total_load / total_gen_base;
    std::vector<double> injections(static_cast<size_t>(grid->bus_count()), 0.0);
    for (const Bus& b : grid->buses()) {
      injections[static_cast<size_t>(b.id)] = b.pg * gen_scale - loads[static_cast<size_t>(b.id)];
    }
    if (fdia) {
      for (double& v : injections) v *= spec.fdia_scale;
    }

    std::shared_ptr<DcSensitivity> engine = cache.get(*true_topo);
    DcSolution sol = engine->solve(injections);

    const Topology& ref_topo = sc.series.at_tick(t);
    std::mt19937_64 rng = stream(spec.rng_seed, kTagMeas, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (int s = 0; s < sc.sensors.count(); ++s) {
      int bus = sc.sensors.sensor_buses[static_cast<size_t>(s)];
      std::vector<SensorReading>& readings = table.frames[static_cast<size_t>(t - 1)][static_cast<size_t>(s)];
      for (int br_id : adjacent_branches(ref_topo, bus)) {
        const Branch& br = grid->branch(br_id);
        double side = br.from_bus == bus ? 1.0 : -1.0;
        double nu = spec.noise_sigma > 0 ? noise(rng) : 0.0;
        SensorReading r;
        r.branch = br_id;
        r.p = side * sol.line_flows[static_cast<size_t>(br_id)] + nu;
        r.q = 0.0;
        readings.push_back(r);
      }
    }
  }
  sc.measurements = std::move(table);
  return sc;
}

void simulate_to_dir(const ScenarioSpec& spec, const std::string& case_path, const std::string& out_dir) {
  std::string case_text = read_text_file(case_path);
  GridPtr grid = parse_matpower(case_text).to_grid();
  Scenario sc = simulate(spec, grid);
  write_scenario(out_dir, sc, case_text);
}

}  // namespace dynwatch
