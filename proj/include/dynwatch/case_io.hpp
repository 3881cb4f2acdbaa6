#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dynwatch/grid.hpp"
#include "dynwatch/scenario.hpp"

namespace dynwatch {

// Raw MATPOWER-format tables, before conversion to the dense-id Grid.
struct CaseBusRow {
  int bus_i = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 slack
  double pd_mw = 0.0;
  double qd_mvar = 0.0;
};

struct CaseGenRow {
  int bus = 0;
  double pg_mw = 0.0;
};

struct CaseBranchRow {
  int fbus = 0;
  int tbus = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;
  int status = 1;
};

struct CaseFile {
  std::string name = "case";
  double base_mva = 100.0;
  std::vector<CaseBusRow> bus;
  std::vector<CaseGenRow> gen;
  std::vector<CaseBranchRow> branch;

  // Validates tables and builds the dense-id grid (p.u. quantities, bus ids
  // remapped 0..n-1 in table order; branch id = branch table row).
  GridPtr to_grid() const;
  // Dense id of an original case bus number.
  int dense_bus_id(int original) const;
};

// Parses the `mpc.baseMVA` / `mpc.bus` / `mpc.gen` / `mpc.branch` subset of
// a MATPOWER .m file. Parse errors carry 1-based line numbers.
CaseFile parse_matpower(const std::string& text);
CaseFile load_case_file(const std::string& path);
GridPtr load_case(const std::string& path);

std::string serialize_matpower(const CaseFile& cf);
void write_case_file(const std::string& path, const CaseFile& cf);

// --- scenario bundle --------------------------------------------------
//
// A scenario is a directory:
//   case.m           MATPOWER case
//   topology.csv     tick_start,tick_end,inactive_branches (quoted comma list)
//   measurements.csv tick,sensor_bus,branch_id,p_flow,q_flow
//   labels.csv       tick,is_anomaly,kind
//   sensors.csv      bus
// Bus/branch ids in the CSV files are the dense 0-based ids.

Scenario load_scenario(const std::string& dir);
void write_scenario(const std::string& dir, const Scenario& scenario, const std::string& case_text);

void write_scores(const std::string& path, const ScoreSeries& scores);
ScoreSeries read_scores(const std::string& path);
std::vector<Label> read_labels(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dynwatch
