#pragma once

#include <optional>
#include <string>

#include "dynwatch/dc.hpp"
#include "dynwatch/grid.hpp"

namespace dynwatch {

enum class DistanceMeasure {
  lodf,            // mean-|LODF| contribution per changed edge, summed
  lodf_local,      // lodf filtered by sensitivity onto one sensor's lines
  ged,             // number of changed edges
  ged_admittance,  // changed edges weighted by admittance magnitude
  eq_conductance,  // equivalent conductance of each changed edge in the union
};

DistanceMeasure parse_measure(const std::string& name);
std::string measure_name(DistanceMeasure m);

struct DistanceRequest {
  Topology topo_a;
  Topology topo_b;
  DistanceMeasure measure = DistanceMeasure::lodf;
  double islanding_penalty = 1.0;
  std::optional<int> sensor;  // required for lodf_local
};

// Union of the two active masks ("transition state").
Topology transition_graph(const Topology& a, const Topology& b);

// x_p: mean |LODF| of a deletion of branch p onto the other lines of the
// transition graph; islanding_penalty when p is a bridge of it.
double edge_contribution(const DcSensitivity& trans, int p, double islanding_penalty);

// Sensor-side filter c_p^s: max |LODF| of outage p onto the sensor's
// adjacent lines in the transition graph; 1 at least when p itself is one
// of those lines.
double sensor_filter(const DcSensitivity& trans, int p, int sensor_bus);

double distance(const DistanceRequest& req, SensitivityCache& cache);
double local_distance(const DistanceRequest& req, SensitivityCache& cache);

// Effective susceptance (equivalent conductance under the DC analogy)
// between two buses of a topology; grounded per component, so disconnected
// inputs are fine. Returns nullopt when a and b sit in different islands.
std::optional<double> equivalent_conductance(const Topology& topo, int bus_a, int bus_b);

}  // namespace dynwatch
