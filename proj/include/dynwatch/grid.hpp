#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dynwatch/errors.hpp"

namespace dynwatch {

struct Bus {
  int id = 0;  // dense 0-based index
  bool is_slack = false;
  double pd = 0.0;  // base real load, p.u. on system base
  double qd = 0.0;
  double pg = 0.0;  // base real generation, p.u.
  int original_id = 0;
};

struct Branch {
  int id = 0;  // dense 0-based index == row in the case branch table
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;       // series x, p.u., > 0
  double admittance_mag = 0.0;  // |1/(r+jx)|, used by the admittance-weighted GED
  bool in_service = true;       // case-file status
};

// Immutable master description of the grid. Topologies are masks over the
// master branch list, so branch ids stay stable across topology changes.
class Grid {
 public:
  Grid(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva);

  int bus_count() const { return static_cast<int>(buses_.size()); }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  const Bus& bus(int id) const;
  const Branch& branch(int id) const;
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  int slack_bus() const { return slack_; }
  double base_mva() const { return base_mva_; }

  const std::vector<int>& incident_branches(int bus) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<std::vector<int>> incident_;  // all master branches per bus
  int slack_ = -1;
  double base_mva_ = 100.0;
};

using GridPtr = std::shared_ptr<const Grid>;

// Active-branch mask over a grid's master branch list.
struct Topology {
  GridPtr grid;
  std::vector<std::uint8_t> active;

  bool is_active(int branch) const { return active[static_cast<size_t>(branch)] != 0; }
  int active_count() const;
  std::uint64_t mask_hash() const;
  bool same_mask(const Topology& other) const { return active == other.active; }
};

// Topology with every in-service branch active.
Topology full_topology(GridPtr grid);
// Topology with the given branches forced inactive (on top of case status).
Topology topology_without(GridPtr grid, const std::vector<int>& inactive);

// Connected-component labels over the active branches; size = bus_count.
std::vector<int> components(const Topology& topo);
bool is_connected(const Topology& topo);
// Throws IslandingError listing components when disconnected.
void require_connected(const Topology& topo, const std::string& context);

// Branch ids whose removal disconnects the active graph (Tarjan over the
// active multigraph; parallel branches are never bridges).
std::vector<int> bridge_branches(const Topology& topo);

// Active branches incident to `bus`, sorted by id.
std::vector<int> adjacent_branches(const Topology& topo, int bus);

// Branch ids active in exactly one of the two topologies.
std::vector<int> symmetric_difference(const Topology& a, const Topology& b);

struct TopologySegment {
  int tick_start = 0;  // inclusive, 1-based
  int tick_end = 0;    // inclusive
  Topology topology;
};

// Contiguous segments covering ticks 1..T.
class TopologySeries {
 public:
  TopologySeries() = default;
  explicit TopologySeries(std::vector<TopologySegment> segments);

  int tick_count() const { return segments_.empty() ? 0 : segments_.back().tick_end; }
  int segment_count() const { return static_cast<int>(segments_.size()); }
  const TopologySegment& segment(int i) const { return segments_[static_cast<size_t>(i)]; }
  const std::vector<TopologySegment>& segments() const { return segments_; }
  int segment_index_at(int tick) const;
  const Topology& at_tick(int tick) const;
  bool is_segment_start(int tick) const;

 private:
  std::vector<TopologySegment> segments_;
};

// Fixed sensor locations; adjacency is a function of the current topology.
struct SensorSet {
  std::vector<int> sensor_buses;

  int count() const { return static_cast<int>(sensor_buses.size()); }
};

}  // namespace dynwatch
