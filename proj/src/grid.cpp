#include "dynwatch/grid.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace dynwatch {

Grid::Grid(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva)
    : buses_(std::move(buses)), branches_(std::move(branches)), base_mva_(base_mva) {
  incident_.resize(buses_.size());
  for (const Branch& br : branches_) {
    if (br.from_bus == br.to_bus) {
      throw DataError("branch " + std::to_string(br.id) + " is a self-loop");
    }
    if (br.from_bus < 0 || br.from_bus >= bus_count() || br.to_bus < 0 || br.to_bus >= bus_count()) {
      throw DataError("branch " + std::to_string(br.id) + " references unknown bus");
    }
    if (!(br.reactance > 0.0)) {
      throw DataError("branch " + std::to_string(br.id) +
                      " has non-positive reactance; the DC model requires x > 0");
    }
    incident_[static_cast<size_t>(br.from_bus)].push_back(br.id);
    incident_[static_cast<size_t>(br.to_bus)].push_back(br.id);
  }
  int n_slack = 0;
  for (const Bus& b : buses_) {
    if (b.is_slack) {
      slack_ = b.id;
      ++n_slack;
    }
  }
  if (n_slack != 1) {
    throw DataError("grid must have exactly one slack bus, found " + std::to_string(n_slack));
  }
}

const Bus& Grid::bus(int id) const {
  if (id < 0 || id >= bus_count()) throw DataError("unknown bus id " + std::to_string(id));
  return buses_[static_cast<size_t>(id)];
}

const Branch& Grid::branch(int id) const {
  if (id < 0 || id >= branch_count()) throw DataError("unknown branch id " + std::to_string(id));
  return branches_[static_cast<size_t>(id)];
}

const std::vector<int>& Grid::incident_branches(int bus) const {
  if (bus < 0 || bus >= bus_count()) throw DataError("unknown bus id " + std::to_string(bus));
  return incident_[static_cast<size_t>(bus)];
}

int Topology::active_count() const {
  int n = 0;
  for (std::uint8_t a : active) n += a ? 1 : 0;
  return n;
}

std::uint64_t Topology::mask_hash() const {
  // FNV-1a over the mask bytes.
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint8_t a : active) {
    h ^= a ? 1u : 0u;
    h *= 1099511628211ull;
  }
  return h;
}

Topology full_topology(GridPtr grid) {
  Topology t;
  t.active.resize(static_cast<size_t>(grid->branch_count()));
  for (const Branch& br : grid->branches()) {
    t.active[static_cast<size_t>(br.id)] = br.in_service ? 1 : 0;
  }
  t.grid = std::move(grid);
  return t;
}

Topology topology_without(GridPtr grid, const std::vector<int>& inactive) {
  Topology t = full_topology(std::move(grid));
  for (int id : inactive) {
    if (id < 0 || id >= static_cast<int>(t.active.size())) {
      throw DataError("unknown branch id " + std::to_string(id) + " in topology record");
    }
    t.active[static_cast<size_t>(id)] = 0;
  }
  return t;
}

std::vector<int> components(const Topology& topo) {
  const Grid& g = *topo.grid;
  std::vector<int> comp(static_cast<size_t>(g.bus_count()), -1);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < g.bus_count(); ++start) {
    if (comp[static_cast<size_t>(start)] != -1) continue;
    comp[static_cast<size_t>(start)] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int br_id : g.incident_branches(u)) {
        if (!topo.is_active(br_id)) continue;
        const Branch& br = g.branch(br_id);
        int v = br.from_bus == u ? br.to_bus : br.from_bus;
        if (comp[static_cast<size_t>(v)] == -1) {
          comp[static_cast<size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

bool is_connected(const Topology& topo) {
  std::vector<int> comp = components(topo);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

void require_connected(const Topology& topo, const std::string& context) {
  std::vector<int> comp = components(topo);
  int n_comp = comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
  if (n_comp <= 1) return;
  std::ostringstream os;
  os << context << ": active topology splits into " << n_comp << " islands; components:";
  for (int c = 0; c < n_comp; ++c) {
    os << " [";
    bool first = true;
    for (size_t b = 0; b < comp.size(); ++b) {
      if (comp[b] != c) continue;
      if (!first) os << ",";
      os << b;
      first = false;
    }
    os << "]";
  }
  throw IslandingError(os.str());
}

std::vector<int> bridge_branches(const Topology& topo) {
  const Grid& g = *topo.grid;
  int n = g.bus_count();
  std::vector<int> disc(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  std::vector<int> bridges;
  int timer = 0;

  // Iterative DFS; an edge (u,v) is a bridge iff low[v] > disc[u] and no
  // parallel active branch joins the same bus pair.
  struct Item {
    int bus;
    int via_branch;  // branch used to enter `bus`, -1 at roots
    size_t edge_idx;
  };
  std::vector<Item> stack;
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<size_t>(root)] != -1) continue;
    disc[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      Item& it = stack.back();
      const std::vector<int>& inc = g.incident_branches(it.bus);
      if (it.edge_idx < inc.size()) {
        int br_id = inc[it.edge_idx++];
        if (!topo.is_active(br_id) || br_id == it.via_branch) continue;
        const Branch& br = g.branch(br_id);
        int v = br.from_bus == it.bus ? br.to_bus : br.from_bus;
        if (disc[static_cast<size_t>(v)] == -1) {
          disc[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = timer++;
          stack.push_back({v, br_id, 0});
        } else {
          low[static_cast<size_t>(it.bus)] =
              std::min(low[static_cast<size_t>(it.bus)], disc[static_cast<size_t>(v)]);
        }
      } else {
        int u = it.bus;
        int via = it.via_branch;
        stack.pop_back();
        if (!stack.empty()) {
          int parent = stack.back().bus;
          low[static_cast<size_t>(parent)] =
              std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(u)]);
          if (low[static_cast<size_t>(u)] > disc[static_cast<size_t>(parent)]) {
            bridges.push_back(via);
          }
        }
      }
    }
  }
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

std::vector<int> adjacent_branches(const Topology& topo, int bus) {
  std::vector<int> out;
  for (int br_id : topo.grid->incident_branches(bus)) {
    if (topo.is_active(br_id)) out.push_back(br_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> symmetric_difference(const Topology& a, const Topology& b) {
  if (a.grid.get() != b.grid.get()) {
    throw DataError("symmetric_difference: topologies reference different grids");
  }
  std::vector<int> out;
  for (size_t i = 0; i < a.active.size(); ++i) {
    if ((a.active[i] != 0) != (b.active[i] != 0)) out.push_back(static_cast<int>(i));
  }
  return out;
}

TopologySeries::TopologySeries(std::vector<TopologySegment> segments) : segments_(std::move(segments)) {
  int expect_start = 1;
  for (const TopologySegment& s : segments_) {
    if (s.tick_start != expect_start || s.tick_end < s.tick_start) {
      throw DataError("topology segments must be contiguous from tick 1; bad segment starting at tick " +
                      std::to_string(s.tick_start));
    }
    expect_start = s.tick_end + 1;
  }
}

int TopologySeries::segment_index_at(int tick) const {
  if (tick < 1 || segments_.empty() || tick > tick_count()) {
    throw DataError("tick " + std::to_string(tick) + " outside topology series");
  }
  // Segments are contiguous; binary search on tick_start.
  int lo = 0, hi = segment_count() - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (segments_[static_cast<size_t>(mid)].tick_start <= tick) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

const Topology& TopologySeries::at_tick(int tick) const {
  return segments_[static_cast<size_t>(segment_index_at(tick))].topology;
}

bool TopologySeries::is_segment_start(int tick) const {
  return segments_[static_cast<size_t>(segment_index_at(tick))].tick_start == tick;
}

}  // namespace dynwatch
