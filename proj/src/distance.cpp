#include "dynwatch/distance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

namespace dynwatch {

DistanceMeasure parse_measure(const std::string& name) {
  if (name == "lodf") return DistanceMeasure::lodf;
  if (name == "lodf-local" || name == "lodf_local") return DistanceMeasure::lodf_local;
  if (name == "ged") return DistanceMeasure::ged;
  if (name == "ged-admittance" || name == "ged_admittance") return DistanceMeasure::ged_admittance;
  if (name == "eq-conductance" || name == "eq_conductance") return DistanceMeasure::eq_conductance;
  throw DataError("unknown distance measure '" + name + "'");
}

std::string measure_name(DistanceMeasure m) {
  switch (m) {
    case DistanceMeasure::lodf: return "lodf";
    case DistanceMeasure::lodf_local: return "lodf-local";
    case DistanceMeasure::ged: return "ged";
    case DistanceMeasure::ged_admittance: return "ged-admittance";
    case DistanceMeasure::eq_conductance: return "eq-conductance";
  }
  return "?";
}

Topology transition_graph(const Topology& a, const Topology& b) {
  if (a.grid.get() != b.grid.get()) {
    throw DataError("transition_graph: topologies reference different grids");
  }
  Topology t;
  t.grid = a.grid;
  t.active.resize(a.active.size());
  for (size_t i = 0; i < a.active.size(); ++i) {
    t.active[i] = (a.active[i] || b.active[i]) ? 1 : 0;
  }
  return t;
}

double edge_contribution(const DcSensitivity& trans, int p, double islanding_penalty) {
  if (!trans.topology().is_active(p)) {
    throw DataError("edge_contribution: branch " + std::to_string(p) + " not active in transition graph");
  }
  const LodfColumn& col = trans.lodf_column(p);
  if (col.bridge) return islanding_penalty;
  double sum = 0.0;
  for (int l : trans.active_branches()) {
    if (l == p) continue;
    sum += std::abs(col.d[static_cast<size_t>(l)]);
  }
  return sum / static_cast<double>(trans.active_branches().size());
}

double sensor_filter(const DcSensitivity& trans, int p, int sensor_bus) {
  std::vector<int> around = adjacent_branches(trans.topology(), sensor_bus);
  if (around.empty()) {
    throw DataError("sensor at bus " + std::to_string(sensor_bus) + " has no active adjacent line (sensor blind)");
  }
  bool p_adjacent = std::binary_search(around.begin(), around.end(), p);
  const LodfColumn& col = trans.lodf_column(p);
  if (col.bridge) {
    // LODF undefined for bridge deletions; treat the change as maximally
    // relevant, matching the adjacent-deletion rule.
    return 1.0;
  }
  double c = p_adjacent ? 1.0 : 0.0;
  for (int l : around) {
    if (l == p) continue;
    c = std::max(c, std::abs(col.d[static_cast<size_t>(l)]));
  }
  return c;
}

std::optional<double> equivalent_conductance(const Topology& topo, int bus_a, int bus_b) {
  const Grid& g = *topo.grid;
  if (bus_a == bus_b) throw DataError("equivalent_conductance: identical endpoints");
  std::vector<int> comp = components(topo);
  if (comp[static_cast<size_t>(bus_a)] != comp[static_cast<size_t>(bus_b)]) return std::nullopt;

  // Ground one bus per component so the Laplacian is non-singular even on
  // disconnected inputs.
  int n = g.bus_count();
  std::vector<int> reduced(static_cast<size_t>(n), -1);
  std::vector<bool> grounded;
  int rows = 0;
  {
    int n_comp = 1 + *std::max_element(comp.begin(), comp.end());
    grounded.assign(static_cast<size_t>(n_comp), false);
    for (int b = 0; b < n; ++b) {
      int c = comp[static_cast<size_t>(b)];
      if (!grounded[static_cast<size_t>(c)]) {
        grounded[static_cast<size_t>(c)] = true;  // reference bus
      } else {
        reduced[static_cast<size_t>(b)] = rows++;
      }
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (const Branch& br : g.branches()) {
    if (!topo.is_active(br.id)) continue;
    double w = 1.0 / br.reactance;
    int i = reduced[static_cast<size_t>(br.from_bus)];
    int j = reduced[static_cast<size_t>(br.to_bus)];
    if (i >= 0) trips.emplace_back(i, i, w);
    if (j >= 0) trips.emplace_back(j, j, w);
    if (i >= 0 && j >= 0) {
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
    }
  }
  Eigen::SparseMatrix<double> lap(rows, rows);
  lap.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("equivalent_conductance: factorization failed");
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  if (reduced[static_cast<size_t>(bus_a)] >= 0) rhs[reduced[static_cast<size_t>(bus_a)]] += 1.0;
  if (reduced[static_cast<size_t>(bus_b)] >= 0) rhs[reduced[static_cast<size_t>(bus_b)]] -= 1.0;
  Eigen::VectorXd v = solver.solve(rhs);
  auto potential = [&](int b) {
    int r = reduced[static_cast<size_t>(b)];
    return r >= 0 ? v[r] : 0.0;
  };
  double r_eff = potential(bus_a) - potential(bus_b);
  if (!(r_eff > 0.0)) {
    throw NumericalError("equivalent_conductance: non-positive effective resistance");
  }
  return 1.0 / r_eff;
}

namespace {

double lodf_distance(const DistanceRequest& req, SensitivityCache& cache, bool local) {
  std::vector<int> changed = symmetric_difference(req.topo_a, req.topo_b);
  if (changed.empty()) return 0.0;
  Topology trans = transition_graph(req.topo_a, req.topo_b);
  std::shared_ptr<DcSensitivity> engine = cache.get(trans);
  double total = 0.0;
  for (int p : changed) {
    double x_p = edge_contribution(*engine, p, req.islanding_penalty);
    if (local) {
      x_p *= sensor_filter(*engine, p, *req.sensor);
    }
    total += x_p;
  }
  return total;
}

}  // namespace

double distance(const DistanceRequest& req, SensitivityCache& cache) {
  if (req.islanding_penalty < 0) throw DataError("islanding_penalty must be >= 0");
  switch (req.measure) {
    case DistanceMeasure::lodf:
      return lodf_distance(req, cache, false);
    case DistanceMeasure::lodf_local:
      return local_distance(req, cache);
    case DistanceMeasure::ged:
      return static_cast<double>(symmetric_difference(req.topo_a, req.topo_b).size());
    case DistanceMeasure::ged_admittance: {
      double total = 0.0;
      for (int p : symmetric_difference(req.topo_a, req.topo_b)) {
        total += req.topo_a.grid->branch(p).admittance_mag;
      }
      return total;
    }
    case DistanceMeasure::eq_conductance: {
      std::vector<int> changed = symmetric_difference(req.topo_a, req.topo_b);
      if (changed.empty()) return 0.0;
      Topology trans = transition_graph(req.topo_a, req.topo_b);
      double total = 0.0;
      for (int p : changed) {
        const Branch& br = req.topo_a.grid->branch(p);
        std::optional<double> g = equivalent_conductance(trans, br.from_bus, br.to_bus);
        total += g.has_value() ? *g : req.islanding_penalty;
      }
      return total;
    }
  }
  throw DataError("unknown distance measure");
}

double local_distance(const DistanceRequest& req, SensitivityCache& cache) {
  if (!req.sensor.has_value()) throw DataError("local distance requires a sensor bus");
  if (*req.sensor < 0 || *req.sensor >= req.topo_a.grid->bus_count()) {
    throw DataError("unknown sensor bus " + std::to_string(*req.sensor));
  }
  return lodf_distance(req, cache, true);
}

}  // namespace dynwatch
