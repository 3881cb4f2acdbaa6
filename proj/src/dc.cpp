#include "dynwatch/dc.hpp"

#include <algorithm>
#include <cmath>

namespace dynwatch {

DcSensitivity::DcSensitivity(Topology topo, double bridge_tolerance)
    : topo_(std::move(topo)), bridge_tol_(bridge_tolerance) {
  require_connected(topo_, "dc sensitivity");
  const Grid& g = *topo_.grid;
  for (const Branch& br : g.branches()) {
    if (topo_.is_active(br.id)) active_.push_back(br.id);
  }

  int n = g.bus_count();
  int slack = g.slack_bus();
  reduced_index_.assign(static_cast<size_t>(n), -1);
  int row = 0;
  for (int b = 0; b < n; ++b) {
    if (b != slack) reduced_index_[static_cast<size_t>(b)] = row++;
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(active_.size() * 4);
  for (int id : active_) {
    const Branch& br = g.branch(id);
    double b_l = 1.0 / br.reactance;
    int i = reduced_index_[static_cast<size_t>(br.from_bus)];
    int j = reduced_index_[static_cast<size_t>(br.to_bus)];
    if (i >= 0) trips.emplace_back(i, i, b_l);
    if (j >= 0) trips.emplace_back(j, j, b_l);
    if (i >= 0 && j >= 0) {
      trips.emplace_back(i, j, -b_l);
      trips.emplace_back(j, i, -b_l);
    }
  }
  Eigen::SparseMatrix<double> bp(n - 1, n - 1);
  bp.setFromTriplets(trips.begin(), trips.end());
  solver_.compute(bp);
  if (solver_.info() != Eigen::Success) {
    throw NumericalError("singular susceptance matrix (factorization failed)");
  }
}

Eigen::VectorXd DcSensitivity::reduced_solve(int plus_bus, int minus_bus) const {
  int m = static_cast<int>(reduced_index_.size()) - 1;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  int ip = reduced_index_[static_cast<size_t>(plus_bus)];
  int im = reduced_index_[static_cast<size_t>(minus_bus)];
  if (ip >= 0) rhs[ip] += 1.0;
  if (im >= 0) rhs[im] -= 1.0;
  Eigen::VectorXd theta = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success) {
    throw NumericalError("sensitivity solve failed");
  }
  return theta;
}

DcSolution DcSensitivity::solve(const std::vector<double>& injections) const {
  const Grid& g = *topo_.grid;
  if (static_cast<int>(injections.size()) != g.bus_count()) {
    throw DataError("injection vector size mismatch");
  }
  int m = g.bus_count() - 1;
  Eigen::VectorXd rhs(m);
  for (int b = 0; b < g.bus_count(); ++b) {
    int r = reduced_index_[static_cast<size_t>(b)];
    if (r >= 0) rhs[r] = injections[static_cast<size_t>(b)];
  }
  Eigen::VectorXd red = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success) {
    throw NumericalError("dc solve failed");
  }
  DcSolution sol;
  sol.theta.assign(static_cast<size_t>(g.bus_count()), 0.0);
  for (int b = 0; b < g.bus_count(); ++b) {
    int r = reduced_index_[static_cast<size_t>(b)];
    if (r >= 0) sol.theta[static_cast<size_t>(b)] = red[r];
  }
  sol.line_flows.assign(static_cast<size_t>(g.branch_count()), 0.0);
  for (int id : active_) {
    const Branch& br = g.branch(id);
    sol.line_flows[static_cast<size_t>(id)] =
        (sol.theta[static_cast<size_t>(br.from_bus)] - sol.theta[static_cast<size_t>(br.to_bus)]) / br.reactance;
  }
  return sol;
}

std::vector<double> DcSensitivity::ptdf(int from_bus, int to_bus) const {
  const Grid& g = *topo_.grid;
  if (from_bus < 0 || from_bus >= g.bus_count() || to_bus < 0 || to_bus >= g.bus_count()) {
    throw DataError("ptdf: unknown bus id");
  }
  Eigen::VectorXd theta = reduced_solve(from_bus, to_bus);
  auto angle = [&](int bus) {
    int r = reduced_index_[static_cast<size_t>(bus)];
    return r >= 0 ? theta[r] : 0.0;
  };
  std::vector<double> out(static_cast<size_t>(g.branch_count()), 0.0);
  for (int id : active_) {
    const Branch& br = g.branch(id);
    out[static_cast<size_t>(id)] = (angle(br.from_bus) - angle(br.to_bus)) / br.reactance;
  }
  return out;
}

LodfColumn DcSensitivity::compute_column(int outage_branch) const {
  const Grid& g = *topo_.grid;
  if (outage_branch < 0 || outage_branch >= g.branch_count() || !topo_.is_active(outage_branch)) {
    throw DataError("lodf: branch " + std::to_string(outage_branch) + " is not active in this topology");
  }
  const Branch& k = g.branch(outage_branch);
  std::vector<double> phi = ptdf(k.from_bus, k.to_bus);
  double denom = 1.0 - phi[static_cast<size_t>(outage_branch)];
  LodfColumn col;
  col.outage_branch = outage_branch;
  if (std::abs(denom) < bridge_tol_) {
    col.bridge = true;
    return col;
  }
  col.d.assign(static_cast<size_t>(g.branch_count()), 0.0);
  for (int id : active_) {
    col.d[static_cast<size_t>(id)] = phi[static_cast<size_t>(id)] / denom;
  }
  col.d[static_cast<size_t>(outage_branch)] = -1.0;
  return col;
}

const LodfColumn& DcSensitivity::lodf_column(int outage_branch) const {
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = column_cache_.find(outage_branch);
    if (it != column_cache_.end()) return *it->second;
  }
  auto col = std::make_shared<const LodfColumn>(compute_column(outage_branch));
  std::lock_guard<std::mutex> lock(cache_mu_);
  auto [it, inserted] = column_cache_.emplace(outage_branch, std::move(col));
  return *it->second;
}

LodfTable DcSensitivity::lodf_table() const {
  LodfTable table;
  table.active_branches = active_;
  table.columns.resize(static_cast<size_t>(topo_.grid->branch_count()));
  for (int k : active_) {
    const LodfColumn& col = lodf_column(k);
    if (col.bridge) {
      table.bridge_set.push_back(k);
    } else {
      table.columns[static_cast<size_t>(k)] = col;
    }
  }
  return table;
}

DcSolution solve_dc(const Topology& topo, const std::vector<double>& injections) {
  return DcSensitivity(topo).solve(injections);
}

std::shared_ptr<DcSensitivity> SensitivityCache::get(const Topology& topo) {
  std::uint64_t h = topo.mask_hash();
  std::unique_lock<std::mutex> lock(mu_);
  auto range = by_hash_.equal_range(h);
  for (auto it = range.first; it != range.second; ++it) {
    Entry& e = by_id_.at(it->second);
    if (e.mask == topo.active) {
      lru_.erase(e.lru_it);
      lru_.push_front(it->second);
      e.lru_it = lru_.begin();
      return e.engine;
    }
  }
  lock.unlock();
  auto engine = std::make_shared<DcSensitivity>(topo);
  lock.lock();
  // Another thread may have built the same topology meanwhile.
  range = by_hash_.equal_range(h);
  for (auto it = range.first; it != range.second; ++it) {
    Entry& e = by_id_.at(it->second);
    if (e.mask == topo.active) return e.engine;
  }
  std::uint64_t id = next_id_++;
  lru_.push_front(id);
  by_id_.emplace(id, Entry{topo.active, engine, lru_.begin()});
  by_hash_.emplace(h, id);
  while (by_id_.size() > capacity_ && !lru_.empty()) {
    std::uint64_t victim = lru_.back();
    lru_.pop_back();
    const Entry& ve = by_id_.at(victim);
    std::uint64_t vh = Topology{nullptr, ve.mask}.mask_hash();
    auto vrange = by_hash_.equal_range(vh);
    for (auto it = vrange.first; it != vrange.second; ++it) {
      if (it->second == victim) {
        by_hash_.erase(it);
        break;
      }
    }
    by_id_.erase(victim);
  }
  return engine;
}

size_t SensitivityCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return by_id_.size();
}

std::vector<double> case_injections(const Grid& grid) {
  std::vector<double> inj(static_cast<size_t>(grid.bus_count()), 0.0);
  for (const Bus& b : grid.buses()) {
    inj[static_cast<size_t>(b.id)] = b.pg - b.pd;
  }
  return inj;
}

}  // namespace dynwatch
