#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynwatch/grid.hpp"

namespace dynwatch {

// One sensor's reading of one adjacent line: complex power w.r.t. the sensor
// bus, per-unit on the system base.
struct SensorReading {
  int branch = 0;
  double p = 0.0;
  double q = 0.0;
};

// measurements[tick-1][sensor_index] -> readings on adjacent lines.
struct MeasurementTable {
  int tick_count = 0;
  std::vector<std::vector<std::vector<SensorReading>>> frames;

  const std::vector<SensorReading>& at(int tick, int sensor_index) const {
    return frames[static_cast<size_t>(tick - 1)][static_cast<size_t>(sensor_index)];
  }
};

struct Label {
  int tick = 0;
  bool is_anomaly = false;
  std::string kind;  // "none", "hidden_outage", "fdia_load_scale"
};

struct Scenario {
  GridPtr grid;
  TopologySeries series;   // reference topologies as the operator believes them
  SensorSet sensors;
  MeasurementTable measurements;
  std::vector<Label> labels;
};

struct SensorScore {
  int sensor_bus = 0;
  double score = 0.0;
};

struct TickScore {
  int tick = 0;
  double score = 0.0;  // A(t) = max_i a_i(t)
  bool warmup = false;
  std::optional<bool> alarm;  // present iff a threshold was configured
  std::vector<SensorScore> top;
};

struct ScoreSeries {
  std::vector<TickScore> ticks;
};

}  // namespace dynwatch
