#include "dynwatch/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dynwatch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Matrix {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;  // 1-based source line per row
};

struct RawCase {
  double base_mva = -1.0;
  bool has_base = false;
  std::map<std::string, Matrix> matrices;
  std::string name;
};

bool parse_number(const std::string& tok, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(tok, &pos);
    if (pos != tok.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Minimal MATPOWER .m reader: scalar assignments and bracketed matrices.
RawCase parse_raw(const std::string& text) {
  RawCase rc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string pending_name;  // matrix currently being read
  Matrix* pending = nullptr;

  while (std::getline(in, line)) {
    ++lineno;
    if (size_t c = line.find('%'); c != std::string::npos) line.erase(c);
    // Trim.
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.empty()) continue;

    if (!pending) {
      if (line.rfind("function", 0) == 0) {
        if (size_t eq = line.find('='); eq != std::string::npos) {
          rc.name = line.substr(eq + 1);
          size_t nb = rc.name.find_first_not_of(" \t");
          if (nb != std::string::npos) rc.name = rc.name.substr(nb);
        }
        continue;
      }
      size_t eq = line.find('=');
      if (eq == std::string::npos || line.rfind("mpc.", 0) != 0) continue;
      std::string key = line.substr(4, eq - 4);
      key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char ch) { return std::isspace(ch); }),
                key.end());
      std::string rhs = line.substr(eq + 1);
      size_t rb = rhs.find_first_not_of(" \t");
      rhs = rb == std::string::npos ? "" : rhs.substr(rb);
      if (rhs.rfind('[', 0) == 0) {
        pending_name = key;
        pending = &rc.matrices[key];
        pending->rows.clear();
        pending->row_lines.clear();
        rhs = rhs.substr(1);
        line = rhs;  // fall through to matrix-row handling below
      } else {
        // Scalar assignment.
        if (size_t sc = rhs.find(';'); sc != std::string::npos) rhs.erase(sc);
        size_t re = rhs.find_last_not_of(" \t");
        rhs = re == std::string::npos ? "" : rhs.substr(0, re + 1);
        double v = 0.0;
        if (key == "baseMVA") {
          if (!parse_number(rhs, v)) {
            throw DataError("parse error at line " + std::to_string(lineno) + ": bad baseMVA value '" + rhs + "'");
          }
          rc.base_mva = v;
          rc.has_base = true;
        }
        continue;
      }
    }

    if (pending) {
      bool close = false;
      if (size_t cb = line.find(']'); cb != std::string::npos) {
        close = true;
        line.erase(cb);
      }
      // Rows separated by ';' within the line.
      std::string seg;
      std::istringstream segs(line);
      while (std::getline(segs, seg, ';')) {
        std::vector<double> row;
        std::istringstream toks(seg);
        std::string tok;
        int col = 0;
        while (toks >> tok) {
          ++col;
          double v = 0.0;
          if (!parse_number(tok, v) || std::isnan(v)) {
            throw DataError("parse error at line " + std::to_string(lineno) + ": non-numeric cell '" + tok +
                            "' in mpc." + pending_name + " (row " +
                            std::to_string(pending->rows.size() + 1) + ", column " + std::to_string(col) + ")");
          }
          row.push_back(v);
        }
        if (!row.empty()) {
          pending->rows.push_back(std::move(row));
          pending->row_lines.push_back(lineno);
        }
      }
      if (close) pending = nullptr;
    }
  }
  if (pending) {
    throw DataError("parse error: unterminated matrix mpc." + pending_name);
  }
  return rc;
}

const Matrix& require_matrix(const RawCase& rc, const std::string& key) {
  auto it = rc.matrices.find(key);
  if (it == rc.matrices.end()) {
    throw DataError("parse error: missing required matrix mpc." + key);
  }
  return it->second;
}

double cell(const Matrix& m, size_t row, size_t col, const std::string& name) {
  const std::vector<double>& r = m.rows[row];
  if (col >= r.size()) {
    throw DataError("parse error at line " + std::to_string(m.row_lines[row]) + ": mpc." + name + " row " +
                    std::to_string(row + 1) + " has only " + std::to_string(r.size()) + " columns");
  }
  return r[col];
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (quoted) {
      if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;  // header row required, content not enforced
      continue;
    }
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() < min_cols) {
      throw DataError("malformed row at " + path + ":" + std::to_string(lineno));
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

long to_long(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed integer '" + s + "' in " + where);
  }
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  if (!parse_number(s, v)) throw DataError("malformed number '" + s + "' in " + where);
  return v;
}

}  // namespace

CaseFile parse_matpower(const std::string& text) {
  RawCase rc = parse_raw(text);
  CaseFile cf;
  if (!rc.name.empty()) cf.name = rc.name;
  if (!rc.has_base) throw DataError("parse error: missing mpc.baseMVA");
  if (!(rc.base_mva > 0)) throw DataError("baseMVA must be positive");
  cf.base_mva = rc.base_mva;

  const Matrix& bus = require_matrix(rc, "bus");
  const Matrix& gen = require_matrix(rc, "gen");
  const Matrix& branch = require_matrix(rc, "branch");

  for (size_t i = 0; i < bus.rows.size(); ++i) {
    CaseBusRow r;
    r.bus_i = static_cast<int>(cell(bus, i, 0, "bus"));
    r.type = static_cast<int>(cell(bus, i, 1, "bus"));
    r.pd_mw = cell(bus, i, 2, "bus");
    r.qd_mvar = cell(bus, i, 3, "bus");
    cf.bus.push_back(r);
  }
  for (size_t i = 0; i < gen.rows.size(); ++i) {
    CaseGenRow r;
    r.bus = static_cast<int>(cell(gen, i, 0, "gen"));
    r.pg_mw = cell(gen, i, 1, "gen");
    cf.gen.push_back(r);
  }
  for (size_t i = 0; i < branch.rows.size(); ++i) {
    CaseBranchRow r;
    r.fbus = static_cast<int>(cell(branch, i, 0, "branch"));
    r.tbus = static_cast<int>(cell(branch, i, 1, "branch"));
    r.r = cell(branch, i, 2, "branch");
    r.x = cell(branch, i, 3, "branch");
    r.b = branch.rows[i].size() > 4 ? branch.rows[i][4] : 0.0;
    r.status = branch.rows[i].size() > 10 ? static_cast<int>(branch.rows[i][10]) : 1;
    cf.branch.push_back(r);
  }
  return cf;
}

GridPtr CaseFile::to_grid() const {
  std::map<int, int> dense;
  std::vector<Bus> buses;
  for (const CaseBusRow& r : bus) {
    if (dense.count(r.bus_i)) {
      throw DataError("duplicate bus id " + std::to_string(r.bus_i) + " in bus table");
    }
    Bus b;
    b.id = static_cast<int>(buses.size());
    b.original_id = r.bus_i;
    b.is_slack = r.type == 3;
    b.pd = r.pd_mw / base_mva;
    b.qd = r.qd_mvar / base_mva;
    dense[r.bus_i] = b.id;
    buses.push_back(b);
  }
  for (const CaseGenRow& g : gen) {
    auto it = dense.find(g.bus);
    if (it == dense.end()) throw DataError("gen table references unknown bus " + std::to_string(g.bus));
    buses[static_cast<size_t>(it->second)].pg += g.pg_mw / base_mva;
  }
  std::vector<Branch> branches;
  for (size_t i = 0; i < branch.size(); ++i) {
    const CaseBranchRow& r = branch[i];
    auto fit = dense.find(r.fbus);
    auto tit = dense.find(r.tbus);
    if (fit == dense.end() || tit == dense.end()) {
      throw DataError("branch row " + std::to_string(i + 1) + " references unknown bus");
    }
    Branch b;
    b.id = static_cast<int>(i);
    b.from_bus = fit->second;
    b.to_bus = tit->second;
    b.reactance = r.x;
    double zmag = std::hypot(r.r, r.x);
    b.admittance_mag = zmag > 0 ? 1.0 / zmag : 0.0;
    b.in_service = r.status != 0;
    branches.push_back(b);
  }
  return std::make_shared<Grid>(std::move(buses), std::move(branches), base_mva);
}

int CaseFile::dense_bus_id(int original) const {
  for (size_t i = 0; i < bus.size(); ++i) {
    if (bus[i].bus_i == original) return static_cast<int>(i);
  }
  throw DataError("unknown original bus id " + std::to_string(original));
}

CaseFile load_case_file(const std::string& path) {
  return parse_matpower(read_text_file(path));
}

GridPtr load_case(const std::string& path) {
  return load_case_file(path).to_grid();
}

std::string serialize_matpower(const CaseFile& cf) {
  std::ostringstream os;
  os << "function mpc = " << cf.name << "\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << fmt_double(cf.base_mva) << ";\n";
  os << "mpc.bus = [\n";
  for (const CaseBusRow& r : cf.bus) {
    os << "\t" << r.bus_i << "\t" << r.type << "\t" << fmt_double(r.pd_mw) << "\t" << fmt_double(r.qd_mvar)
       << "\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n";
  }
  os << "];\n";
  os << "mpc.gen = [\n";
  for (const CaseGenRow& r : cf.gen) {
    os << "\t" << r.bus << "\t" << fmt_double(r.pg_mw) << "\t0\t0\t0\t1\t100\t1\t"
       << fmt_double(std::max(r.pg_mw, 0.0) * 2.0) << "\t0;\n";
  }
  os << "];\n";
  os << "mpc.branch = [\n";
  for (const CaseBranchRow& r : cf.branch) {
    os << "\t" << r.fbus << "\t" << r.tbus << "\t" << fmt_double(r.r) << "\t" << fmt_double(r.x) << "\t"
       << fmt_double(r.b) << "\t0\t0\t0\t0\t0\t" << r.status << "\t-360\t360;\n";
  }
  os << "];\n";
  return os.str();
}

void write_case_file(const std::string& path, const CaseFile& cf) {
  write_text_file(path, serialize_matpower(cf));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

Scenario load_scenario(const std::string& dir) {
  Scenario sc;
  sc.grid = load_case((fs::path(dir) / "case.m").string());

  // sensors.csv
  SensorSet sensors;
  for (const std::vector<std::string>& row : read_csv((fs::path(dir) / "sensors.csv").string(), 1)) {
    int bus = static_cast<int>(to_long(row[0], "sensors.csv"));
    if (bus < 0 || bus >= sc.grid->bus_count()) {
      throw DataError("sensors.csv references unknown bus " + std::to_string(bus));
    }
    sensors.sensor_buses.push_back(bus);
  }
  if (sensors.sensor_buses.empty()) throw DataError("sensors.csv lists no sensors");
  sc.sensors = sensors;

  // topology.csv
  std::vector<TopologySegment> segments;
  for (const std::vector<std::string>& row : read_csv((fs::path(dir) / "topology.csv").string(), 2)) {
    TopologySegment seg;
    seg.tick_start = static_cast<int>(to_long(row[0], "topology.csv"));
    seg.tick_end = static_cast<int>(to_long(row[1], "topology.csv"));
    std::vector<int> inactive;
    if (row.size() > 2 && !row[2].empty()) {
      std::istringstream ids(row[2]);
      std::string tok;
      while (std::getline(ids, tok, ',')) {
        inactive.push_back(static_cast<int>(to_long(tok, "topology.csv inactive list")));
      }
    }
    seg.topology = topology_without(sc.grid, inactive);
    segments.push_back(std::move(seg));
  }
  sc.series = TopologySeries(std::move(segments));
  int ticks = sc.series.tick_count();
  if (ticks <= 0) throw DataError("topology.csv defines no ticks");

  // labels.csv
  std::vector<Label> labels(static_cast<size_t>(ticks));
  std::vector<bool> seen(static_cast<size_t>(ticks), false);
  for (const std::vector<std::string>& row : read_csv((fs::path(dir) / "labels.csv").string(), 3)) {
    Label l;
    l.tick = static_cast<int>(to_long(row[0], "labels.csv"));
    if (l.tick < 1 || l.tick > ticks) {
      throw DataError("labels.csv tick " + std::to_string(l.tick) + " outside 1.." + std::to_string(ticks) +
                      " (tick-count mismatch)");
    }
    l.is_anomaly = to_long(row[1], "labels.csv") != 0;
    l.kind = row[2];
    labels[static_cast<size_t>(l.tick - 1)] = l;
    seen[static_cast<size_t>(l.tick - 1)] = true;
  }
  for (int t = 1; t <= ticks; ++t) {
    if (!seen[static_cast<size_t>(t - 1)]) {
      throw DataError("labels.csv missing tick " + std::to_string(t) + " (tick-count mismatch)");
    }
  }
  sc.labels = std::move(labels);

  // measurements.csv
  std::map<int, int> sensor_index;
  for (int i = 0; i < sc.sensors.count(); ++i) sensor_index[sc.sensors.sensor_buses[static_cast<size_t>(i)]] = i;
  MeasurementTable table;
  table.tick_count = ticks;
  table.frames.assign(static_cast<size_t>(ticks),
                      std::vector<std::vector<SensorReading>>(static_cast<size_t>(sc.sensors.count())));
  int max_tick_seen = 0;
  for (const std::vector<std::string>& row : read_csv((fs::path(dir) / "measurements.csv").string(), 5)) {
    int tick = static_cast<int>(to_long(row[0], "measurements.csv"));
    int bus = static_cast<int>(to_long(row[1], "measurements.csv"));
    int branch = static_cast<int>(to_long(row[2], "measurements.csv"));
    if (tick < 1 || tick > ticks) {
      throw DataError("measurements.csv tick " + std::to_string(tick) + " outside topology range (tick-count mismatch)");
    }
    max_tick_seen = std::max(max_tick_seen, tick);
    auto it = sensor_index.find(bus);
    if (it == sensor_index.end()) {
      throw DataError("measurements.csv references non-sensor bus " + std::to_string(bus));
    }
    if (branch < 0 || branch >= sc.grid->branch_count()) {
      throw DataError("measurements.csv references unknown branch " + std::to_string(branch));
    }
    SensorReading r;
    r.branch = branch;
    r.p = to_double(row[3], "measurements.csv");
    r.q = to_double(row[4], "measurements.csv");
    table.frames[static_cast<size_t>(tick - 1)][static_cast<size_t>(it->second)].push_back(r);
  }
  if (max_tick_seen != ticks) {
    throw DataError("measurements.csv covers ticks up to " + std::to_string(max_tick_seen) + " but topology.csv defines " +
                    std::to_string(ticks) + " (tick-count mismatch)");
  }
  sc.measurements = std::move(table);
  return sc;
}

void write_scenario(const std::string& dir, const Scenario& scenario, const std::string& case_text) {
  fs::create_directories(dir);
  write_text_file((fs::path(dir) / "case.m").string(), case_text);

  {
    std::ostringstream os;
    os << "bus\n";
    for (int b : scenario.sensors.sensor_buses) os << b << "\n";
    write_text_file((fs::path(dir) / "sensors.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    os << "tick_start,tick_end,inactive_branches\n";
    Topology base = full_topology(scenario.grid);
    for (const TopologySegment& seg : scenario.series.segments()) {
      os << seg.tick_start << "," << seg.tick_end << ",\"";
      bool first = true;
      for (size_t i = 0; i < seg.topology.active.size(); ++i) {
        if (base.active[i] && !seg.topology.active[i]) {
          if (!first) os << ",";
          os << i;
          first = false;
        }
      }
      os << "\"\n";
    }
    write_text_file((fs::path(dir) / "topology.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    os << "tick,is_anomaly,kind\n";
    for (const Label& l : scenario.labels) {
      os << l.tick << "," << (l.is_anomaly ? 1 : 0) << "," << (l.kind.empty() ? "none" : l.kind) << "\n";
    }
    write_text_file((fs::path(dir) / "labels.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    os << "tick,sensor_bus,branch_id,p_flow,q_flow\n";
    for (int t = 1; t <= scenario.measurements.tick_count; ++t) {
      for (int s = 0; s < scenario.sensors.count(); ++s) {
        for (const SensorReading& r : scenario.measurements.at(t, s)) {
          os << t << "," << scenario.sensors.sensor_buses[static_cast<size_t>(s)] << "," << r.branch << ","
             << fmt_double(r.p) << "," << fmt_double(r.q) << "\n";
        }
      }
    }
    write_text_file((fs::path(dir) / "measurements.csv").string(), os.str());
  }
}

void write_scores(const std::string& path, const ScoreSeries& scores) {
  std::ostringstream os;
  for (const TickScore& t : scores.ticks) {
    ordered_json rec;
    rec["tick"] = t.tick;
    rec["score"] = t.score;
    rec["warmup"] = t.warmup;
    if (t.alarm.has_value()) rec["alarm"] = *t.alarm;
    ordered_json top = ordered_json::array();
    for (const SensorScore& s : t.top) {
      top.push_back(ordered_json{{"sensor", s.sensor_bus}, {"score", s.score}});
    }
    rec["top"] = top;
    os << rec.dump() << "\n";
  }
  write_text_file(path, os.str());
}

ScoreSeries read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  ScoreSeries out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError("bad score record at " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    TickScore t;
    t.tick = rec.at("tick").get<int>();
    t.score = rec.at("score").get<double>();
    t.warmup = rec.value("warmup", false);
    if (rec.contains("alarm")) t.alarm = rec["alarm"].get<bool>();
    if (rec.contains("top")) {
      for (const auto& s : rec["top"]) {
        t.top.push_back(SensorScore{s.at("sensor").get<int>(), s.at("score").get<double>()});
      }
    }
    out.ticks.push_back(std::move(t));
  }
  return out;
}

std::vector<Label> read_labels(const std::string& path) {
  std::vector<Label> out;
  for (const std::vector<std::string>& row : read_csv(path, 3)) {
    Label l;
    l.tick = static_cast<int>(to_long(row[0], "labels.csv"));
    l.is_anomaly = to_long(row[1], "labels.csv") != 0;
    l.kind = row[2];
    out.push_back(std::move(l));
  }
  std::sort(out.begin(), out.end(), [](const Label& a, const Label& b) { return a.tick < b.tick; });
  return out;
}

}  // namespace dynwatch
