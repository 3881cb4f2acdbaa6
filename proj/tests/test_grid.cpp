#include <doctest.h>

#include <random>

#include "dynwatch/case_io.hpp"
#include "dynwatch/grid.hpp"
#include "oracles.hpp"

using namespace dynwatch;

namespace {

GridPtr triangle() { return load_case(oracle::data_file("triangle.m")); }

}  // namespace

TEST_CASE("adjacent_branches on the triangle") {
  GridPtr g = triangle();
  Topology full = full_topology(g);
  CHECK(adjacent_branches(full, 0) == std::vector<int>{0, 1});
  Topology cut = topology_without(g, {0});
  CHECK(adjacent_branches(cut, 0) == std::vector<int>{1});
  CHECK_THROWS_AS(adjacent_branches(full, 99), DataError);
}

TEST_CASE("adjacent_branches on case14 matches the branch table") {
  CaseFile cf = load_case_file(oracle::data_file("case14.m"));
  GridPtr g = cf.to_grid();
  Topology full = full_topology(g);
  // Original bus 1 appears in exactly two branch rows: 1-2 and 1-5.
  CHECK(adjacent_branches(full, cf.dense_bus_id(1)) == std::vector<int>{0, 1});
  // Original bus 9 rows: 4-9 (8), 7-9 (14), 9-10 (15), 9-14 (16).
  CHECK(adjacent_branches(full, cf.dense_bus_id(9)) == std::vector<int>{8, 14, 15, 16});
}

TEST_CASE("symmetric_difference basics") {
  GridPtr g = triangle();
  Topology a = full_topology(g);
  Topology b = full_topology(g);
  CHECK(symmetric_difference(a, b).empty());

  Topology c = topology_without(g, {1});
  CHECK(symmetric_difference(a, c) == std::vector<int>{1});

  // {3,9} vs {9,12} relative to a base reduces to {3,12}; the triangle only
  // has 3 branches, so exercise it on case14.
  GridPtr g14 = load_case(oracle::data_file("case14.m"));
  Topology x = topology_without(g14, {3, 9});
  Topology y = topology_without(g14, {9, 12});
  CHECK(symmetric_difference(x, y) == std::vector<int>{3, 12});
}

TEST_CASE("symmetric_difference properties on random masks") {
  GridPtr g = load_case(oracle::data_file("case14.m"));
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, g->branch_count() - 1);
  for (int it = 0; it < 50; ++it) {
    Topology a = topology_without(g, {pick(rng), pick(rng)});
    Topology b = topology_without(g, {pick(rng), pick(rng)});
    CHECK(symmetric_difference(a, b) == symmetric_difference(b, a));
    CHECK(symmetric_difference(a, a).empty());
  }
}

TEST_CASE("sensor adjacency stays within the active mask") {
  GridPtr g = load_case(oracle::data_file("case14.m"));
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, g->branch_count() - 1);
  for (int it = 0; it < 30; ++it) {
    Topology t = topology_without(g, {pick(rng), pick(rng)});
    for (int bus = 0; bus < g->bus_count(); ++bus) {
      for (int br : adjacent_branches(t, bus)) {
        CHECK(t.is_active(br));
      }
    }
  }
}

TEST_CASE("grid validation") {
  std::vector<Bus> buses(2);
  buses[0].id = 0;
  buses[0].is_slack = true;
  buses[1].id = 1;
  std::vector<Branch> branches(1);
  branches[0].id = 0;
  branches[0].from_bus = 0;
  branches[0].to_bus = 1;
  branches[0].reactance = 0.1;

  CHECK_NOTHROW(Grid(buses, branches, 100.0));

  SUBCASE("zero reactance rejected") {
    branches[0].reactance = 0.0;
    CHECK_THROWS_AS(Grid(buses, branches, 100.0), DataError);
  }
  SUBCASE("negative reactance rejected") {
    branches[0].reactance = -0.2;
    CHECK_THROWS_AS(Grid(buses, branches, 100.0), DataError);
  }
  SUBCASE("two slacks rejected") {
    buses[1].is_slack = true;
    CHECK_THROWS_AS(Grid(buses, branches, 100.0), DataError);
  }
  SUBCASE("self loop rejected") {
    branches[0].to_bus = 0;
    CHECK_THROWS_AS(Grid(buses, branches, 100.0), DataError);
  }
}

TEST_CASE("bridges and connectivity") {
  GridPtr g14 = load_case(oracle::data_file("case14.m"));
  Topology full = full_topology(g14);
  // Bus 8 hangs off bus 7 through branch 13 (7-8): the unique bridge.
  CHECK(bridge_branches(full) == std::vector<int>{13});
  CHECK(is_connected(full));
  Topology cut = topology_without(g14, {13});
  CHECK_FALSE(is_connected(cut));
  CHECK_THROWS_AS(require_connected(cut, "test"), IslandingError);

  // Parallel branches are never bridges.
  std::vector<Bus> buses(2);
  buses[0].id = 0;
  buses[0].is_slack = true;
  buses[1].id = 1;
  std::vector<Branch> branches(2);
  for (int i = 0; i < 2; ++i) {
    branches[static_cast<size_t>(i)].id = i;
    branches[static_cast<size_t>(i)].from_bus = 0;
    branches[static_cast<size_t>(i)].to_bus = 1;
    branches[static_cast<size_t>(i)].reactance = 0.1;
  }
  auto gp = std::make_shared<Grid>(buses, branches, 100.0);
  CHECK(bridge_branches(full_topology(gp)).empty());
}

TEST_CASE("topology series segments") {
  GridPtr g = triangle();
  std::vector<TopologySegment> segs;
  segs.push_back({1, 5, full_topology(g)});
  segs.push_back({6, 10, topology_without(g, {0})});
  segs.push_back({11, 14, topology_without(g, {1})});
  TopologySeries series(segs);
  CHECK(series.tick_count() == 14);
  CHECK(series.segment_index_at(1) == 0);
  CHECK(series.segment_index_at(5) == 0);
  CHECK(series.segment_index_at(6) == 1);
  CHECK(series.segment_index_at(14) == 2);
  CHECK(series.is_segment_start(11));
  CHECK_FALSE(series.is_segment_start(12));
  CHECK_THROWS_AS(series.segment_index_at(15), DataError);

  segs[1].tick_start = 7;  // gap
  CHECK_THROWS_AS(TopologySeries{segs}, DataError);
}
