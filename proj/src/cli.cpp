#include "dynwatch/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynwatch/case_io.hpp"
#include "dynwatch/detector.hpp"
#include "dynwatch/evaluation.hpp"
#include "dynwatch/simulator.hpp"

namespace dynwatch::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

int default_threads() {
  if (const char* env = std::getenv("DYNWATCH_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void print_error(const std::string& kind, const std::string& message) {
  ordered_json err;
  err["error"] = message;
  err["kind"] = kind;
  std::cerr << err.dump() << "\n";
}

// Comma list of inactive branch ids; empty or "none" means the full topology.
std::vector<int> parse_mask(const std::string& mask) {
  std::vector<int> out;
  if (mask.empty() || mask == "none" || mask == "-") return out;
  std::string tok;
  std::istringstream in(mask);
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw DataError("bad branch id '" + tok + "' in mask");
    }
  }
  return out;
}

// "3..12" or a comma list.
std::vector<int> parse_factors(const std::string& text) {
  std::vector<int> out;
  if (size_t dots = text.find(".."); dots != std::string::npos) {
    int lo = std::stoi(text.substr(0, dots));
    int hi = std::stoi(text.substr(dots + 2));
    if (lo < 1 || hi < lo) throw DataError("bad factor range '" + text + "'");
    for (int f = lo; f <= hi; ++f) out.push_back(f);
    return out;
  }
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw DataError("empty factor list");
  return out;
}

ordered_json report_json(const EvalReport& rep) {
  ordered_json j;
  j["auc"] = rep.auc;
  j["f_measure"] = rep.f_measure;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["top_k"] = rep.top_k;
  if (rep.detect_seconds > 0) {
    j["detect_seconds"] = rep.detect_seconds;
    j["per_tick_per_sensor_ms"] = rep.per_tick_per_sensor_ms;
  }
  return j;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"DynWatch: topology-aware anomaly detection for grid sensor streams"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker thread cap (env DYNWATCH_THREADS)");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "chatty progress on stderr");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario bundle");
  std::string sim_case, sim_out;
  ScenarioSpec spec;
  std::string sim_kind = "hidden_outage";
  sim->add_option("--case", sim_case, "MATPOWER case file")->required();
  sim->add_option("--out", sim_out, "output scenario directory")->required();
  sim->add_option("--topologies", spec.n_topologies, "number of topology segments");
  sim->add_option("--ticks-per", spec.ticks_per_topology, "ticks per segment");
  sim->add_option("--anomalies", spec.n_anomalies, "number of injected anomalies");
  sim->add_option("--kind", sim_kind, "anomaly kind: hidden_outage|fdia");
  sim->add_option("--seed", spec.rng_seed, "RNG seed");
  sim->add_option("--sensors", spec.n_sensors, "random sensor count (default min(10, buses))");
  sim->add_option("--sensor-bus", spec.sensor_buses, "explicit sensor bus ids (repeatable)");
  sim->add_option("--noise", spec.noise_sigma, "noise sigma, p.u.");
  sim->add_option("--load-variation", spec.load_variation_pct, "daily load swing percent");
  sim->add_option("--fdia-scale", spec.fdia_scale, "FDIA load multiplier");
  sim->add_option("--anomaly-ticks", spec.anomaly_duration_ticks, "duration of each anomaly");

  // detect
  auto* det = app.add_subcommand("detect", "score a scenario bundle");
  std::string det_scenario, det_out = "scores.jsonl", det_mode = "global";
  DetectorConfig dconf;
  std::optional<double> det_tau;
  det->add_option("--scenario", det_scenario, "scenario directory")->required();
  det->add_option("--out", det_out, "output scores (JSON lines)");
  det->add_option("--mode", det_mode, "global|local");
  det->add_option("--window", dconf.window, "history window in ticks (0 = all)");
  det->add_option("--scale", dconf.scale_factor, "distance scale factor");
  det->add_option("--tau", det_tau, "alarm threshold");
  det->add_option("--top-k", dconf.top_k, "sensors reported per tick");
  det->add_option("--iqr-floor", dconf.iqr_floor, "lower bound for the IQR denominator");
  det->add_flag("--uniform-weights", dconf.uniform_weights, "topology-blind ablation weights");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "AUC / top-k F-measure of a score file");
  std::string ev_scores, ev_labels;
  int ev_topk = 50;
  ev->add_option("--scores", ev_scores, "scores.jsonl from detect")->required();
  ev->add_option("--labels", ev_labels, "labels.csv from the scenario")->required();
  ev->add_option("--top-k", ev_topk, "ranking cut for the F-measure");

  // lodf
  auto* lf = app.add_subcommand("lodf", "line outage distribution factors");
  std::string lf_case, lf_mask;
  int lf_outage = -1;
  lf->add_option("--case", lf_case, "MATPOWER case file")->required();
  lf->add_option("--outage", lf_outage, "outage branch id (omit for the full table)");
  lf->add_option("--inactive", lf_mask, "comma list of branches to deactivate first");

  // distance
  auto* di = app.add_subcommand("distance", "graph distance between two topologies");
  std::string di_case, di_a, di_b, di_measure = "lodf";
  int di_sensor = -1;
  double di_penalty = 1.0;
  di->add_option("--case", di_case, "MATPOWER case file")->required();
  di->add_option("--a", di_a, "inactive branches of topology A (comma list, empty = full)");
  di->add_option("--b", di_b, "inactive branches of topology B");
  di->add_option("--measure", di_measure, "lodf|lodf-local|ged|ged-admittance|eq-conductance");
  di->add_option("--sensor", di_sensor, "sensor bus for lodf-local");
  di->add_option("--penalty", di_penalty, "islanding penalty");

  // bench
  auto* be = app.add_subcommand("bench", "scalability bench via case duplication");
  std::string be_case, be_factors = "3..12";
  ScenarioSpec be_spec;
  be->add_option("--case", be_case, "MATPOWER base case")->required();
  be->add_option("--factors", be_factors, "duplication factors, e.g. 3..12 or 3,6,12");
  be->add_option("--topologies", be_spec.n_topologies, "segments per run");
  be->add_option("--ticks-per", be_spec.ticks_per_topology, "ticks per segment");
  be->add_option("--anomalies", be_spec.n_anomalies, "anomalies per run");
  be->add_option("--seed", be_spec.rng_seed, "RNG seed");

  // validate-theorems
  auto* vt = app.add_subcommand("validate-theorems", "Monte-Carlo check of the error bounds");
  long vt_trials = 100000;
  std::uint64_t vt_seed = 1;
  vt->add_option("--trials", vt_trials, "trials per check");
  vt->add_option("--seed", vt_seed, "RNG seed");

  std::vector<std::string> argv(args);
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 1;
  }

  try {
    if (sim->parsed()) {
      spec.anomaly_kind = parse_anomaly_kind(sim_kind);
      simulate_to_dir(spec, sim_case, sim_out);
      ordered_json j;
      j["out"] = sim_out;
      j["ticks"] = spec.total_ticks();
      j["anomalies"] = spec.n_anomalies;
      j["kind"] = anomaly_kind_name(spec.anomaly_kind);
      j["seed"] = spec.rng_seed;
      std::cout << j.dump() << "\n";
    } else if (det->parsed()) {
      if (det_mode == "local") {
        dconf.mode = DetectorMode::local;
      } else if (det_mode != "global") {
        throw DataError("unknown mode '" + det_mode + "'");
      }
      dconf.tau = det_tau;
      Scenario sc = load_scenario(det_scenario);
      ScoreSeries scores = detect(sc, dconf);
      write_scores(det_out, scores);
      int alarms = 0;
      double mx = 0.0;
      for (const TickScore& t : scores.ticks) {
        if (t.alarm.value_or(false)) ++alarms;
        mx = std::max(mx, t.score);
      }
      ordered_json j;
      j["out"] = det_out;
      j["ticks"] = static_cast<int>(scores.ticks.size());
      j["max_score"] = mx;
      if (det_tau.has_value()) j["alarms"] = alarms;
      std::cout << j.dump() << "\n";
    } else if (ev->parsed()) {
      ScoreSeries scores = read_scores(ev_scores);
      std::vector<Label> labels = read_labels(ev_labels);
      EvalReport rep = evaluate_scores(scores, labels, ev_topk);
      std::cout << report_json(rep).dump() << "\n";
    } else if (lf->parsed()) {
      GridPtr grid = load_case(lf_case);
      Topology topo = topology_without(grid, parse_mask(lf_mask));
      DcSensitivity engine(topo);
      ordered_json j;
      j["case"] = lf_case;
      auto column_json = [&](const LodfColumn& col) {
        ordered_json cj;
        cj["outage"] = col.outage_branch;
        cj["bridge"] = col.bridge;
        if (!col.bridge) {
          ordered_json d = ordered_json::array();
          for (int l : engine.active_branches()) {
            d.push_back(ordered_json{{"branch", l}, {"value", col.d[static_cast<size_t>(l)]}});
          }
          cj["d"] = d;
        }
        return cj;
      };
      if (lf_outage >= 0) {
        j["column"] = column_json(engine.lodf_column(lf_outage));
      } else {
        LodfTable table = engine.lodf_table();
        j["bridges"] = table.bridge_set;
        ordered_json cols = ordered_json::array();
        for (int k : table.active_branches) {
          if (table.columns[static_cast<size_t>(k)].has_value()) {
            cols.push_back(column_json(*table.columns[static_cast<size_t>(k)]));
          }
        }
        j["columns"] = cols;
      }
      std::cout << j.dump() << "\n";
    } else if (di->parsed()) {
      GridPtr grid = load_case(di_case);
      DistanceRequest req;
      req.topo_a = topology_without(grid, parse_mask(di_a));
      req.topo_b = topology_without(grid, parse_mask(di_b));
      req.measure = parse_measure(di_measure);
      req.islanding_penalty = di_penalty;
      if (req.measure == DistanceMeasure::lodf_local) {
        if (di_sensor < 0) throw DataError("--sensor is required for measure lodf-local");
        req.sensor = di_sensor;
      }
      SensitivityCache cache;
      double d = distance(req, cache);
      ordered_json j;
      j["measure"] = measure_name(req.measure);
      j["changed"] = symmetric_difference(req.topo_a, req.topo_b);
      j["value"] = d;
      std::cout << j.dump() << "\n";
    } else if (be->parsed()) {
      CaseFile base = load_case_file(be_case);
      std::vector<int> factors = parse_factors(be_factors);
      DetectorConfig config;
      BenchReport rep = scale_bench(base, factors, be_spec, config);
      ordered_json j;
      ordered_json rows = ordered_json::array();
      for (const BenchRow& r : rep.rows) {
        rows.push_back(ordered_json{{"factor", r.factor},
                                    {"edges", r.edges},
                                    {"buses", r.buses},
                                    {"detect_seconds", r.detect_seconds},
                                    {"per_tick_per_sensor_ms", r.per_tick_per_sensor_ms}});
        if (verbose) {
          std::cerr << "factor " << r.factor << ": " << r.edges << " edges, " << r.detect_seconds << " s\n";
        }
      }
      j["rows"] = rows;
      j["fit"] = ordered_json{{"slope", rep.slope}, {"intercept", rep.intercept}, {"r2", rep.r2}};
      std::cout << j.dump() << "\n";
    } else if (vt->parsed()) {
      TheoremValidationReport rep = validate_theorems(vt_trials, vt_seed, threads);
      ordered_json j;
      ordered_json trials = ordered_json::array();
      for (const TheoremTrialResult& r : rep.bound_trials) {
        trials.push_back(ordered_json{{"mse", r.mse},
                                      {"se", r.se},
                                      {"lower", r.lower_bound},
                                      {"upper", r.upper_bound},
                                      {"max_weight", r.max_weight},
                                      {"max_cd", r.max_cd},
                                      {"pass", r.pass}});
      }
      j["bound_trials"] = trials;
      j["single_tick"] = ordered_json{{"mse", rep.single_tick.mse}, {"expected", 2.0}, {"pass", rep.single_tick.pass}};
      ordered_json trend = ordered_json::array();
      for (const TrendPoint& p : rep.trend) {
        trend.push_back(ordered_json{{"T", p.history_len}, {"mse", p.mse}, {"se", p.se}});
      }
      j["trend"] = trend;
      j["estimator_mean"] = rep.estimator_mean;
      j["bounds_pass"] = rep.bounds_pass;
      j["exact_pass"] = rep.exact_pass;
      j["monotone_pass"] = rep.monotone_pass;
      j["unbiased_pass"] = rep.unbiased_pass;
      j["all_pass"] = rep.all_pass;
      std::cout << j.dump() << "\n";
    }
  } catch (const IslandingError& e) {
    print_error("numerical", e.what());
    return 3;
  } catch (const NumericalError& e) {
    print_error("numerical", e.what());
    return 3;
  } catch (const DataError& e) {
    print_error("data", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("data", e.what());
    return 2;
  }
  return 0;
}

}  // namespace dynwatch::cli
