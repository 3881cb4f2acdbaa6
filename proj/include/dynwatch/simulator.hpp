#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynwatch/case_io.hpp"
#include "dynwatch/grid.hpp"
#include "dynwatch/scenario.hpp"

namespace dynwatch {

enum class AnomalyKind { hidden_outage, fdia_load_scale };

AnomalyKind parse_anomaly_kind(const std::string& name);
std::string anomaly_kind_name(AnomalyKind k);

struct ScenarioSpec {
  int n_topologies = 20;
  int ticks_per_topology = 60;
  int n_anomalies = 50;
  AnomalyKind anomaly_kind = AnomalyKind::hidden_outage;
  int anomaly_duration_ticks = 1;
  double fdia_scale = 0.8;          // attacked-load multiplier
  double load_variation_pct = 8.0;  // daily swing, (100 +- pct)% of base
  double noise_sigma = 0.002;       // p.u., both load jitter and sensor noise
  std::uint64_t rng_seed = 1;
  int n_sensors = 0;                // 0 = min(10, bus count)
  std::vector<int> sensor_buses;    // overrides n_sensors when non-empty

  int total_ticks() const { return n_topologies * ticks_per_topology; }
};

// Reference schedule: n_topologies segments, each the base grid minus one
// random non-bridge branch.
TopologySeries build_topology_schedule(const ScenarioSpec& spec, GridPtr grid);

// Per-bus loads at a tick: base * (1 + A*daily(t)) * (1 + eps).
std::vector<double> synth_loads(const ScenarioSpec& spec, const Grid& grid, int tick);

// Full scenario: schedule, measurements from DC solves of the true grid
// (anomaly ticks diverge from the reference), labels, sensors.
Scenario simulate(const ScenarioSpec& spec, GridPtr grid);

// Convenience: simulate from a case file and write the bundle directory.
void simulate_to_dir(const ScenarioSpec& spec, const std::string& case_path, const std::string& out_dir);

}  // namespace dynwatch
