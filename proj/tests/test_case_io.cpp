#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "dynwatch/case_io.hpp"
#include "dynwatch/simulator.hpp"
#include "oracles.hpp"

using namespace dynwatch;
namespace fs = std::filesystem;

TEST_CASE("parse_matpower on the published case14") {
  CaseFile cf = load_case_file(oracle::data_file("case14.m"));
  CHECK(cf.bus.size() == 14);
  CHECK(cf.branch.size() == 20);
  CHECK(cf.base_mva == 100.0);
  GridPtr g = cf.to_grid();
  CHECK(g->bus_count() == 14);
  CHECK(g->branch_count() == 20);
  CHECK(g->slack_bus() == cf.dense_bus_id(1));
  CHECK(g->bus(g->slack_bus()).original_id == 1);
  // Loads are per-unit on baseMVA.
  CHECK(g->bus(cf.dense_bus_id(3)).pd == doctest::Approx(0.942));
  CHECK(g->bus(cf.dense_bus_id(1)).pg == doctest::Approx(2.324));
}

TEST_CASE("parse_matpower minimal 2-bus case") {
  CaseFile cf = parse_matpower(
      "mpc.baseMVA = 100;\n"
      "mpc.bus = [\n1 3 0 0 0 0 1 1 0 0 1 1.1 0.9;\n2 1 50 0 0 0 1 1 0 0 1 1.1 0.9;\n];\n"
      "mpc.gen = [\n1 50;\n];\n"
      "mpc.branch = [\n1 2 0 0.2 0;\n];\n");
  CHECK(cf.bus.size() == 2);
  CHECK(cf.branch.size() == 1);
  GridPtr g = cf.to_grid();
  CHECK(g->bus_count() == 2);
  CHECK(g->branch(0).reactance == doctest::Approx(0.2));
}

TEST_CASE("parse errors carry position info") {
  SUBCASE("NaN cell names row and column") {
    std::string text =
        "mpc.baseMVA = 100;\n"
        "mpc.bus = [\n1 3 0 0;\n2 1 50 0;\n];\n"
        "mpc.gen = [\n1 50;\n];\n"
        "mpc.branch = [\n1 2 0 NaN 0;\n];\n";
    CHECK_THROWS_WITH_AS(parse_matpower(text), doctest::Contains("column 4"), DataError);
  }
  SUBCASE("missing matrix") {
    CHECK_THROWS_WITH_AS(parse_matpower("mpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0;\n];\n"),
                         doctest::Contains("mpc.gen"), DataError);
  }
  SUBCASE("duplicate bus id") {
    std::string text =
        "mpc.baseMVA = 100;\n"
        "mpc.bus = [\n1 3 0 0;\n1 1 50 0;\n];\n"
        "mpc.gen = [\n1 50;\n];\n"
        "mpc.branch = [\n1 1 0 0.1 0;\n];\n";
    CaseFile cf = parse_matpower(text);
    CHECK_THROWS_WITH_AS(cf.to_grid(), doctest::Contains("duplicate bus"), DataError);
  }
  SUBCASE("status 0 branches parse as out of service") {
    std::string text =
        "mpc.baseMVA = 100;\n"
        "mpc.bus = [\n1 3 0 0;\n2 1 50 0;\n];\n"
        "mpc.gen = [\n1 50;\n];\n"
        "mpc.branch = [\n1 2 0 0.1 0 0 0 0 0 0 0 -360 360;\n1 2 0 0.2 0 0 0 0 0 0 1 -360 360;\n];\n";
    GridPtr g = parse_matpower(text).to_grid();
    Topology full = full_topology(g);
    CHECK_FALSE(full.is_active(0));
    CHECK(full.is_active(1));
  }
}

TEST_CASE("parser survives arbitrary bytes") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 2000);
  for (int it = 0; it < 200; ++it) {
    std::string junk;
    int n = len(rng);
    for (int i = 0; i < n; ++i) junk.push_back(static_cast<char>(byte(rng)));
    try {
      parse_matpower(junk);
    } catch (const Error&) {
      // structured errors only
    }
  }
  // Mutations of a valid case.
  std::string base = read_text_file(oracle::data_file("case14.m"));
  std::uniform_int_distribution<size_t> pos(0, base.size() - 1);
  for (int it = 0; it < 200; ++it) {
    std::string mutated = base;
    for (int k = 0; k < 5; ++k) mutated[pos(rng)] = static_cast<char>(byte(rng));
    try {
      parse_matpower(mutated).to_grid();
    } catch (const Error&) {
    }
  }
}

TEST_CASE("scenario bundle round-trips") {
  GridPtr g = load_case(oracle::data_file("case14.m"));
  ScenarioSpec spec;
  spec.n_topologies = 3;
  spec.ticks_per_topology = 5;
  spec.n_anomalies = 2;
  spec.rng_seed = 42;
  spec.n_sensors = 4;
  Scenario sc = simulate(spec, g);

  fs::path dir = fs::temp_directory_path() / "dynwatch_bundle_test";
  fs::remove_all(dir);
  write_scenario(dir.string(), sc, read_text_file(oracle::data_file("case14.m")));
  Scenario back = load_scenario(dir.string());

  CHECK(back.sensors.sensor_buses == sc.sensors.sensor_buses);
  CHECK(back.series.tick_count() == sc.series.tick_count());
  CHECK(back.series.segment_count() == sc.series.segment_count());
  for (int i = 0; i < sc.series.segment_count(); ++i) {
    CHECK(back.series.segment(i).topology.active == sc.series.segment(i).topology.active);
  }
  REQUIRE(back.labels.size() == sc.labels.size());
  for (size_t i = 0; i < sc.labels.size(); ++i) {
    CHECK(back.labels[i].is_anomaly == sc.labels[i].is_anomaly);
    CHECK((back.labels[i].kind == sc.labels[i].kind || (sc.labels[i].kind.empty() && back.labels[i].kind == "none")));
  }
  for (int t = 1; t <= sc.measurements.tick_count; ++t) {
    for (int s = 0; s < sc.sensors.count(); ++s) {
      const auto& a = sc.measurements.at(t, s);
      const auto& b = back.measurements.at(t, s);
      REQUIRE(a.size() == b.size());
      for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].branch == b[i].branch);
        CHECK(a[i].p == doctest::Approx(b[i].p).epsilon(1e-15));
      }
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("scenario validation errors") {
  GridPtr g = load_case(oracle::data_file("case14.m"));
  ScenarioSpec spec;
  spec.n_topologies = 2;
  spec.ticks_per_topology = 4;
  spec.n_anomalies = 0;
  spec.n_sensors = 2;
  Scenario sc = simulate(spec, g);
  fs::path dir = fs::temp_directory_path() / "dynwatch_bundle_bad";
  fs::remove_all(dir);
  write_scenario(dir.string(), sc, read_text_file(oracle::data_file("case14.m")));

  SUBCASE("tick-count mismatch in labels") {
    std::string labels = read_text_file((dir / "labels.csv").string());
    labels += "99,0,none\n";
    write_text_file((dir / "labels.csv").string(), labels);
    CHECK_THROWS_WITH_AS(load_scenario(dir.string()), doctest::Contains("tick-count mismatch"), DataError);
  }
  SUBCASE("unknown branch id in topology record") {
    write_text_file((dir / "topology.csv").string(),
                    "tick_start,tick_end,inactive_branches\n1,4,\"999\"\n5,8,\"\"\n");
    CHECK_THROWS_WITH_AS(load_scenario(dir.string()), doctest::Contains("unknown branch"), DataError);
  }
  SUBCASE("malformed row") {
    write_text_file((dir / "sensors.csv").string(), "bus\nnot_a_number\n");
    CHECK_THROWS_AS(load_scenario(dir.string()), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("score files round-trip") {
  ScoreSeries s;
  for (int t = 1; t <= 3; ++t) {
    TickScore ts;
    ts.tick = t;
    ts.score = 0.5 * t;
    ts.warmup = t == 1;
    if (t == 3) ts.alarm = true;
    ts.top.push_back(SensorScore{4, 0.25 * t});
    s.ticks.push_back(ts);
  }
  fs::path path = fs::temp_directory_path() / "dynwatch_scores_test.jsonl";
  write_scores(path.string(), s);
  ScoreSeries back = read_scores(path.string());
  REQUIRE(back.ticks.size() == 3);
  CHECK(back.ticks[1].score == doctest::Approx(1.0));
  CHECK(back.ticks[0].warmup);
  CHECK(back.ticks[2].alarm.value_or(false));
  CHECK(back.ticks[2].top.at(0).sensor_bus == 4);
  fs::remove(path);
}

TEST_CASE("serialize_matpower round-trips through the parser") {
  CaseFile cf = load_case_file(oracle::data_file("case14.m"));
  CaseFile back = parse_matpower(serialize_matpower(cf));
  REQUIRE(back.bus.size() == cf.bus.size());
  REQUIRE(back.branch.size() == cf.branch.size());
  REQUIRE(back.gen.size() == cf.gen.size());
  for (size_t i = 0; i < cf.branch.size(); ++i) {
    CHECK(back.branch[i].fbus == cf.branch[i].fbus);
    CHECK(back.branch[i].tbus == cf.branch[i].tbus);
    CHECK(back.branch[i].x == cf.branch[i].x);
    CHECK(back.branch[i].status == cf.branch[i].status);
  }
  for (size_t i = 0; i < cf.bus.size(); ++i) {
    CHECK(back.bus[i].bus_i == cf.bus[i].bus_i);
    CHECK(back.bus[i].type == cf.bus[i].type);
    CHECK(back.bus[i].pd_mw == cf.bus[i].pd_mw);
  }
}
