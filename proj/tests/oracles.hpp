#pragma once

// Test-only oracles, independent of the library's solve paths: a dense
// textbook DC power flow (Gaussian elimination on the full susceptance
// matrix) and a projected-gradient solver for the weighting QP.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynwatch/grid.hpp"

namespace oracle {

// Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-12) throw std::runtime_error("oracle: singular matrix");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (size_t r = n; r-- > 0;) {
    double s = b[r];
    for (size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

// Textbook DC power flow: build B' bus-by-bus, drop the slack, eliminate.
inline std::vector<double> dc_flows(const dynwatch::Topology& topo, const std::vector<double>& injections) {
  const dynwatch::Grid& g = *topo.grid;
  int n = g.bus_count();
  int slack = g.slack_bus();
  std::vector<int> idx(static_cast<size_t>(n), -1);
  int m = 0;
  for (int b = 0; b < n; ++b) {
    if (b != slack) idx[static_cast<size_t>(b)] = m++;
  }
  std::vector<std::vector<double>> bp(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(m), 0.0));
  for (const dynwatch::Branch& br : g.branches()) {
    if (!topo.is_active(br.id)) continue;
    double y = 1.0 / br.reactance;
    int i = idx[static_cast<size_t>(br.from_bus)];
    int j = idx[static_cast<size_t>(br.to_bus)];
    if (i >= 0) bp[static_cast<size_t>(i)][static_cast<size_t>(i)] += y;
    if (j >= 0) bp[static_cast<size_t>(j)][static_cast<size_t>(j)] += y;
    if (i >= 0 && j >= 0) {
      bp[static_cast<size_t>(i)][static_cast<size_t>(j)] -= y;
      bp[static_cast<size_t>(j)][static_cast<size_t>(i)] -= y;
    }
  }
  std::vector<double> rhs(static_cast<size_t>(m), 0.0);
  for (int b = 0; b < n; ++b) {
    if (idx[static_cast<size_t>(b)] >= 0) rhs[static_cast<size_t>(idx[static_cast<size_t>(b)])] = injections[static_cast<size_t>(b)];
  }
  std::vector<double> th_red = solve_dense(bp, rhs);
  std::vector<double> theta(static_cast<size_t>(n), 0.0);
  for (int b = 0; b < n; ++b) {
    if (idx[static_cast<size_t>(b)] >= 0) theta[static_cast<size_t>(b)] = th_red[static_cast<size_t>(idx[static_cast<size_t>(b)])];
  }
  std::vector<double> flows(static_cast<size_t>(g.branch_count()), 0.0);
  for (const dynwatch::Branch& br : g.branches()) {
    if (!topo.is_active(br.id)) continue;
    flows[static_cast<size_t>(br.id)] =
        (theta[static_cast<size_t>(br.from_bus)] - theta[static_cast<size_t>(br.to_bus)]) / br.reactance;
  }
  return flows;
}

// Simplex projection by bisection on the water level (no breakpoint scan,
// so it shares no code path with the implementation under test).
inline std::vector<double> project_simplex_bisect(const std::vector<double>& v) {
  double lo = -1.0, hi = 0.0;
  for (double x : v) hi = std::max(hi, x);
  lo = hi - 1.0 - 1.0;
  auto mass = [&](double lam) {
    double s = 0.0;
    for (double x : v) s += std::max(x - lam, 0.0);
    return s;
  };
  while (mass(lo) < 1.0) lo -= 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<double> w(v.size());
  for (size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - lo, 0.0);
  return w;
}

// Projected gradient descent on 0.5 w.w + d.w over the simplex.
inline std::vector<double> weighting_pgd(const std::vector<double>& d, int iters = 4000, double step = 0.2) {
  std::vector<double> w(d.size(), 1.0 / static_cast<double>(d.size()));
  for (int it = 0; it < iters; ++it) {
    std::vector<double> v(w.size());
    for (size_t i = 0; i < w.size(); ++i) v[i] = w[i] - step * (d[i] + w[i]);
    w = project_simplex_bisect(v);
  }
  return w;
}

inline std::string data_dir() { return DYNWATCH_TEST_DATA_DIR; }
inline std::string data_file(const std::string& name) { return data_dir() + "/" + name; }

}  // namespace oracle
