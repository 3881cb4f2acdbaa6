#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dynwatch/case_io.hpp"
#include "dynwatch/detector.hpp"
#include "dynwatch/evaluation.hpp"
#include "dynwatch/simulator.hpp"

namespace py = pybind11;
using namespace dynwatch;

namespace {

Topology make_topology(GridPtr grid, const std::vector<int>& inactive) {
  return topology_without(std::move(grid), inactive);
}

ScenarioSpec spec_from_kwargs(int topologies, int ticks_per, int anomalies, const std::string& kind,
                              double fdia_scale, double load_variation, double noise, std::uint64_t seed,
                              int sensors, const std::vector<int>& sensor_buses, int anomaly_ticks) {
  ScenarioSpec spec;
  spec.n_topologies = topologies;
  spec.ticks_per_topology = ticks_per;
  spec.n_anomalies = anomalies;
  spec.anomaly_kind = parse_anomaly_kind(kind);
  spec.fdia_scale = fdia_scale;
  spec.load_variation_pct = load_variation;
  spec.noise_sigma = noise;
  spec.rng_seed = seed;
  spec.n_sensors = sensors;
  spec.sensor_buses = sensor_buses;
  spec.anomaly_duration_ticks = anomaly_ticks;
  return spec;
}

DetectorConfig config_from_kwargs(const std::string& mode, int window, double scale, py::object tau,
                                  double iqr_floor, int top_k, bool uniform_weights) {
  DetectorConfig config;
  config.mode = mode == "local" ? DetectorMode::local : DetectorMode::global;
  if (mode != "local" && mode != "global") throw DataError("mode must be 'global' or 'local'");
  config.window = window;
  config.scale_factor = scale;
  if (!tau.is_none()) config.tau = tau.cast<double>();
  config.iqr_floor = iqr_floor;
  config.top_k = top_k;
  config.uniform_weights = uniform_weights;
  return config;
}

py::dict score_to_dict(const TickScore& t) {
  py::dict d;
  d["tick"] = t.tick;
  d["score"] = t.score;
  d["warmup"] = t.warmup;
  if (t.alarm.has_value()) d["alarm"] = *t.alarm;
  py::list top;
  for (const SensorScore& s : t.top) {
    py::dict e;
    e["sensor"] = s.sensor_bus;
    e["score"] = s.score;
    top.append(e);
  }
  d["top"] = top;
  return d;
}

py::dict report_to_dict(const EvalReport& rep) {
  py::dict d;
  d["auc"] = rep.auc;
  d["f_measure"] = rep.f_measure;
  d["precision"] = rep.precision;
  d["recall"] = rep.recall;
  d["top_k"] = rep.top_k;
  d["detect_seconds"] = rep.detect_seconds;
  d["per_tick_per_sensor_ms"] = rep.per_tick_per_sensor_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dynwatch, m) {
  m.doc() = "Topology-aware anomaly detection for power-grid sensor streams";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Grid, GridPtr>(m, "Grid")
      .def_property_readonly("bus_count", &Grid::bus_count)
      .def_property_readonly("branch_count", &Grid::branch_count)
      .def_property_readonly("slack_bus", &Grid::slack_bus)
      .def_property_readonly("base_mva", &Grid::base_mva)
      .def("adjacent_branches",
           [](GridPtr grid, int bus, const std::vector<int>& inactive) {
             return adjacent_branches(make_topology(grid, inactive), bus);
           },
           py::arg("bus"), py::arg("inactive") = std::vector<int>{})
      .def("bridges", [](GridPtr grid, const std::vector<int>& inactive) {
        return bridge_branches(make_topology(grid, inactive));
      }, py::arg("inactive") = std::vector<int>{});

  m.def("load_case", &load_case, py::arg("path"), "Parse a MATPOWER case file into a Grid");
  m.def("parse_case", [](const std::string& text) { return parse_matpower(text).to_grid(); }, py::arg("text"));

  m.def("solve_dc",
        [](GridPtr grid, const std::vector<double>& injections, const std::vector<int>& inactive) {
          DcSolution sol = solve_dc(make_topology(grid, inactive), injections);
          return py::make_tuple(sol.theta, sol.line_flows);
        },
        py::arg("grid"), py::arg("injections"), py::arg("inactive") = std::vector<int>{},
        "DC power flow: returns (theta, line_flows)");

  m.def("case_injections", [](GridPtr grid) { return case_injections(*grid); }, py::arg("grid"));

  m.def("ptdf",
        [](GridPtr grid, int from_bus, int to_bus, const std::vector<int>& inactive) {
          return DcSensitivity(make_topology(grid, inactive)).ptdf(from_bus, to_bus);
        },
        py::arg("grid"), py::arg("from_bus"), py::arg("to_bus"), py::arg("inactive") = std::vector<int>{});

  m.def("lodf_column",
        [](GridPtr grid, int outage, const std::vector<int>& inactive) {
          DcSensitivity engine(make_topology(grid, inactive));
          const LodfColumn& col = engine.lodf_column(outage);
          py::dict d;
          d["outage"] = col.outage_branch;
          d["bridge"] = col.bridge;
          d["d"] = col.bridge ? std::vector<double>{} : col.d;
          return d;
        },
        py::arg("grid"), py::arg("outage"), py::arg("inactive") = std::vector<int>{});

  m.def("distance",
        [](GridPtr grid, const std::vector<int>& inactive_a, const std::vector<int>& inactive_b,
           const std::string& measure, py::object sensor, double penalty) {
          DistanceRequest req;
          req.topo_a = make_topology(grid, inactive_a);
          req.topo_b = make_topology(grid, inactive_b);
          req.measure = parse_measure(measure);
          req.islanding_penalty = penalty;
          if (!sensor.is_none()) req.sensor = sensor.cast<int>();
          SensitivityCache cache;
          return distance(req, cache);
        },
        py::arg("grid"), py::arg("inactive_a"), py::arg("inactive_b"), py::arg("measure") = "lodf",
        py::arg("sensor") = py::none(), py::arg("penalty") = 1.0);

  m.def("normalize_scale", &normalize_scale, py::arg("d"), py::arg("scale_factor") = kDefaultScaleFactor);

  m.def("compute_weights",
        [](const std::vector<double>& d) {
          WeightVector wv = compute_weights(d);
          return py::make_tuple(wv.w, wv.lambda_star);
        },
        py::arg("d"), "Bias-variance temporal weights: returns (w, lambda_star)");

  m.def("weighted_median",
        [](const std::vector<double>& v, const std::vector<double>& w) { return weighted_median(v, w); },
        py::arg("values"), py::arg("weights"));
  m.def("weighted_iqr",
        [](const std::vector<double>& v, const std::vector<double>& w) { return weighted_iqr(v, w); },
        py::arg("values"), py::arg("weights"));
  m.def("weighted_quantile",
        [](const std::vector<double>& v, const std::vector<double>& w, double q) {
          return weighted_quantile(v, w, q);
        },
        py::arg("values"), py::arg("weights"), py::arg("q"));

  m.def("auc", &auc, py::arg("scores"), py::arg("labels"));
  m.def("f_measure_topk",
        [](const std::vector<double>& scores, const std::vector<bool>& labels, int k) {
          double p = 0, r = 0;
          double f = f_measure_topk(scores, labels, k, &p, &r);
          return py::make_tuple(f, p, r);
        },
        py::arg("scores"), py::arg("labels"), py::arg("k"), "Returns (f, precision, recall)");

  m.def("simulate",
        [](const std::string& case_path, const std::string& out_dir, int topologies, int ticks_per,
           int anomalies, const std::string& kind, double fdia_scale, double load_variation, double noise,
           std::uint64_t seed, int sensors, const std::vector<int>& sensor_buses, int anomaly_ticks) {
          simulate_to_dir(spec_from_kwargs(topologies, ticks_per, anomalies, kind, fdia_scale, load_variation,
                                           noise, seed, sensors, sensor_buses, anomaly_ticks),
                          case_path, out_dir);
        },
        py::arg("case_path"), py::arg("out_dir"), py::arg("topologies") = 20, py::arg("ticks_per") = 60,
        py::arg("anomalies") = 50, py::arg("kind") = "hidden_outage", py::arg("fdia_scale") = 0.8,
        py::arg("load_variation") = 8.0, py::arg("noise") = 0.002, py::arg("seed") = 1,
        py::arg("sensors") = 0, py::arg("sensor_buses") = std::vector<int>{}, py::arg("anomaly_ticks") = 1,
        "Write a scenario bundle directory");

  m.def("detect",
        [](const std::string& scenario_dir, const std::string& out_path, const std::string& mode, int window,
           double scale, py::object tau, double iqr_floor, int top_k, bool uniform_weights) {
          Scenario sc = load_scenario(scenario_dir);
          ScoreSeries scores =
              detect(sc, config_from_kwargs(mode, window, scale, tau, iqr_floor, top_k, uniform_weights));
          if (!out_path.empty()) write_scores(out_path, scores);
          py::list out;
          for (const TickScore& t : scores.ticks) out.append(score_to_dict(t));
          return out;
        },
        py::arg("scenario_dir"), py::arg("out_path") = "", py::arg("mode") = "global", py::arg("window") = 0,
        py::arg("scale") = kDefaultScaleFactor, py::arg("tau") = py::none(), py::arg("iqr_floor") = 1e-6,
        py::arg("top_k") = 3, py::arg("uniform_weights") = false,
        "Run the detector over a scenario bundle; returns per-tick records");

  m.def("evaluate",
        [](const std::string& scores_path, const std::string& labels_path, int top_k) {
          return report_to_dict(evaluate_scores(read_scores(scores_path), read_labels(labels_path), top_k));
        },
        py::arg("scores_path"), py::arg("labels_path"), py::arg("top_k") = 50);

  m.def("validate_theorems",
        [](long trials, std::uint64_t seed, int threads) {
          TheoremValidationReport rep = validate_theorems(trials, seed, threads);
          py::dict d;
          d["bounds_pass"] = rep.bounds_pass;
          d["exact_pass"] = rep.exact_pass;
          d["monotone_pass"] = rep.monotone_pass;
          d["unbiased_pass"] = rep.unbiased_pass;
          d["all_pass"] = rep.all_pass;
          py::list trend;
          for (const TrendPoint& p : rep.trend) {
            py::dict e;
            e["T"] = p.history_len;
            e["mse"] = p.mse;
            e["se"] = p.se;
            trend.append(e);
          }
          d["trend"] = trend;
          return d;
        },
        py::arg("trials") = 100000, py::arg("seed") = 1, py::arg("threads") = 2);
}
