#pragma once

#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCholesky>

#include "dynwatch/grid.hpp"

namespace dynwatch {

struct DcSolution {
  std::vector<double> theta;       // bus angles, radians, slack = 0
  std::vector<double> line_flows;  // indexed by branch id; 0 for inactive branches
};

// One column of the LODF table: sensitivities of every observed line to the
// outage of `outage_branch`. Absent when the outage islands the grid.
struct LodfColumn {
  int outage_branch = 0;
  bool bridge = false;
  std::vector<double> d;  // indexed by branch id; d[outage] = -1; 0 for inactive
};

struct LodfTable {
  std::vector<int> active_branches;
  std::vector<int> bridge_set;
  // columns[k] present iff branch k is active and not a bridge.
  std::vector<std::optional<LodfColumn>> columns;
};

inline constexpr double kBridgeTolerance = 1e-6;

// Factorized DC sensitivity engine for one topology: one sparse Cholesky of
// the slack-reduced susceptance matrix, reused for flow solves, PTDF and
// LODF columns. Immutable after construction apart from the column cache.
class DcSensitivity {
 public:
  explicit DcSensitivity(Topology topo, double bridge_tolerance = kBridgeTolerance);

  const Topology& topology() const { return topo_; }
  const std::vector<int>& active_branches() const { return active_; }

  // Solves B'theta = P (slack removed). Injections indexed by bus, p.u.
  DcSolution solve(const std::vector<double>& injections) const;

  // Per-branch flow sensitivity to a 1 p.u. transfer from_bus -> to_bus.
  std::vector<double> ptdf(int from_bus, int to_bus) const;

  // Cached column accessor; thread-safe.
  const LodfColumn& lodf_column(int outage_branch) const;

  LodfTable lodf_table() const;

 private:
  Eigen::VectorXd reduced_solve(int plus_bus, int minus_bus) const;
  LodfColumn compute_column(int outage_branch) const;

  Topology topo_;
  double bridge_tol_;
  std::vector<int> active_;
  std::vector<int> reduced_index_;  // bus -> row in reduced system, -1 for slack
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;

  mutable std::mutex cache_mu_;
  mutable std::unordered_map<int, std::shared_ptr<const LodfColumn>> column_cache_;
};

DcSolution solve_dc(const Topology& topo, const std::vector<double>& injections);

// LRU cache of factorizations keyed by active-mask hash. Thread-safe;
// concurrent lookups of the same topology return the same engine.
class SensitivityCache {
 public:
  explicit SensitivityCache(size_t capacity = 64) : capacity_(capacity) {}

  std::shared_ptr<DcSensitivity> get(const Topology& topo);
  size_t size() const;

 private:
  struct Entry {
    std::vector<std::uint8_t> mask;
    std::shared_ptr<DcSensitivity> engine;
    std::list<std::uint64_t>::iterator lru_it;  // position in lru_ (stores entry id)
  };

  size_t capacity_;
  mutable std::mutex mu_;
  std::uint64_t next_id_ = 0;
  std::list<std::uint64_t> lru_;                          // entry ids, most recent first
  std::unordered_map<std::uint64_t, Entry> by_id_;        // entry id -> entry
  std::unordered_multimap<std::uint64_t, std::uint64_t> by_hash_;  // mask hash -> entry id
};

// Net per-bus injections (pg - pd) from the case data, p.u.
std::vector<double> case_injections(const Grid& grid);

}  // namespace dynwatch
