#include "dynwatch/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

namespace dynwatch {

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DataError("auc: size mismatch");
  size_t n_pos = 0, n_neg = 0;
  for (bool l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auc undefined: needs at least one positive and one negative label");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over ties, then the Mann-Whitney U statistic.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double f_measure_topk(const std::vector<double>& scores, const std::vector<bool>& labels, int k,
                      double* precision_out, double* recall_out) {
  if (scores.size() != labels.size()) throw DataError("f_measure_topk: size mismatch");
  if (k < 0 || static_cast<size_t>(k) > scores.size()) throw DataError("f_measure_topk: bad k");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // earlier tick wins ties at the cut
  });
  size_t n_pos = 0;
  for (bool l : labels) n_pos += l ? 1 : 0;
  size_t tp = 0;
  for (int i = 0; i < k; ++i) {
    if (labels[order[static_cast<size_t>(i)]]) ++tp;
  }
  double precision = k > 0 ? static_cast<double>(tp) / static_cast<double>(k) : 0.0;
  double recall = n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0;
  if (precision_out) *precision_out = precision;
  if (recall_out) *recall_out = recall;
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport evaluate_scores(const ScoreSeries& scores, const std::vector<Label>& labels, int top_k) {
  if (scores.ticks.size() != labels.size()) {
    throw DataError("evaluate: scores cover " + std::to_string(scores.ticks.size()) + " ticks, labels " +
                    std::to_string(labels.size()) + " (tick-count mismatch)");
  }
  std::vector<double> s(scores.ticks.size());
  std::vector<bool> l(labels.size());
  for (size_t i = 0; i < scores.ticks.size(); ++i) {
    if (scores.ticks[i].tick != labels[i].tick) {
      throw DataError("evaluate: tick misalignment between scores and labels");
    }
    s[i] = scores.ticks[i].score;
    l[i] = labels[i].is_anomaly;
  }
  EvalReport rep;
  rep.top_k = top_k;
  rep.auc = auc(s, l);
  rep.f_measure = f_measure_topk(s, l, top_k, &rep.precision, &rep.recall);
  return rep;
}

EvalReport run_detection(const Scenario& scenario, const DetectorConfig& config, int top_k) {
  auto t0 = std::chrono::steady_clock::now();
  ScoreSeries scores = detect(scenario, config);
  auto t1 = std::chrono::steady_clock::now();
  EvalReport rep = evaluate_scores(scores, scenario.labels, top_k);
  rep.detect_seconds = std::chrono::duration<double>(t1 - t0).count();
  double tick_sensor = static_cast<double>(scenario.measurements.tick_count) *
                       std::max(1, scenario.sensors.count());
  rep.per_tick_per_sensor_ms = rep.detect_seconds * 1000.0 / tick_sensor;
  return rep;
}

EvalReport ablation_uniform(const Scenario& scenario, DetectorConfig config, int top_k) {
  config.uniform_weights = true;
  return run_detection(scenario, config, top_k);
}

CaseFile duplicate_case(const CaseFile& base, int factor) {
  if (factor < 1) throw DataError("duplication factor must be >= 1");
  CaseFile out;
  out.name = base.name + "_x" + std::to_string(factor);
  out.base_mva = base.base_mva;
  int offset = 0;
  for (const CaseBusRow& b : base.bus) offset = std::max(offset, b.bus_i);
  offset += 1;

  std::vector<double> xs;
  for (const CaseBranchRow& br : base.branch) xs.push_back(br.x);
  std::nth_element(xs.begin(), xs.begin() + static_cast<long>(xs.size() / 2), xs.end());
  double coupling_x = xs.empty() ? 0.1 : xs[xs.size() / 2];

  for (int c = 0; c < factor; ++c) {
    for (const CaseBusRow& b : base.bus) {
      CaseBusRow r = b;
      r.bus_i += c * offset;
      if (c > 0 && r.type == 3) r.type = 2;  // one slack overall
      out.bus.push_back(r);
    }
    for (const CaseGenRow& g : base.gen) {
      CaseGenRow r = g;
      r.bus += c * offset;
      out.gen.push_back(r);
    }
    for (const CaseBranchRow& br : base.branch) {
      CaseBranchRow r = br;
      r.fbus += c * offset;
      r.tbus += c * offset;
      out.branch.push_back(r);
    }
    if (c > 0) {
      for (const CaseBusRow& b : base.bus) {
        CaseBranchRow r;
        r.fbus = b.bus_i + (c - 1) * offset;
        r.tbus = b.bus_i + c * offset;
        r.r = 0.0;
        r.x = coupling_x;
        r.b = 0.0;
        r.status = 1;
        out.branch.push_back(r);
      }
    }
  }
  return out;
}

CaseFile make_synthetic_case(int n_buses, int n_branches, std::uint64_t seed) {
  if (n_buses < 3) throw DataError("synthetic case needs >= 3 buses");
  if (n_branches < n_buses) throw DataError("synthetic case needs >= n_buses branches for the ring");
  CaseFile cf;
  cf.name = "synthetic" + std::to_string(n_buses);
  cf.base_mva = 100.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x_dist(0.05, 0.3);
  std::uniform_real_distribution<double> load_dist(20.0, 100.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  double total_load = 0.0;
  for (int b = 0; b < n_buses; ++b) {
    CaseBusRow r;
    r.bus_i = b + 1;
    r.type = b == 0 ? 3 : 1;
    if (u01(rng) < 0.6) {
      r.pd_mw = load_dist(rng);
      total_load += r.pd_mw;
    }
    cf.bus.push_back(r);
  }
  // Ring keeps it connected; chords make it meshed so single deletions
  // rarely create bridges.
  for (int b = 0; b < n_buses; ++b) {
    CaseBranchRow r;
    r.fbus = b + 1;
    r.tbus = (b + 1) % n_buses + 1;
    r.x = x_dist(rng);
    cf.branch.push_back(r);
  }
  std::uniform_int_distribution<int> bus_pick(1, n_buses);
  while (static_cast<int>(cf.branch.size()) < n_branches) {
    int a = bus_pick(rng), b = bus_pick(rng);
    if (a == b) continue;
    CaseBranchRow r;
    r.fbus = a;
    r.tbus = b;
    r.x = x_dist(rng);
    cf.branch.push_back(r);
  }
  int n_gens = std::max(1, n_buses / 10);
  std::vector<int> gen_buses;
  gen_buses.push_back(1);  // slack carries a generator
  while (static_cast<int>(gen_buses.size()) < n_gens) {
    int b = bus_pick(rng);
    if (std::find(gen_buses.begin(), gen_buses.end(), b) == gen_buses.end()) gen_buses.push_back(b);
  }
  for (int b : gen_buses) {
    CaseGenRow g;
    g.bus = b;
    g.pg_mw = total_load / static_cast<double>(n_gens);
    cf.gen.push_back(g);
  }
  return cf;
}

void linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& intercept,
                double& r2) {
  size_t n = x.size();
  if (n != y.size() || n < 2) throw DataError("linear_fit: need >= 2 points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw DataError("linear_fit: degenerate x");
  slope = sxy / sxx;
  intercept = my - slope * mx;
  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double e = y[i] - (intercept + slope * x[i]);
    ss_res += e * e;
  }
  r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
}

BenchReport scale_bench(const CaseFile& base, const std::vector<int>& factors, const ScenarioSpec& proto,
                        const DetectorConfig& config) {
  BenchReport rep;
  std::vector<double> xs, ys;
  for (int factor : factors) {
    CaseFile dup = duplicate_case(base, factor);
    GridPtr grid = dup.to_grid();
    ScenarioSpec spec = proto;
    if (spec.sensor_buses.empty() && spec.n_sensors == 0) spec.n_sensors = 1;
    Scenario sc = simulate(spec, grid);
    EvalReport er = run_detection(sc, config, std::min(spec.n_anomalies, sc.measurements.tick_count));
    BenchRow row;
    row.factor = factor;
    row.edges = grid->branch_count();
    row.buses = grid->bus_count();
    row.detect_seconds = er.detect_seconds;
    row.per_tick_per_sensor_ms = er.per_tick_per_sensor_ms;
    rep.rows.push_back(row);
    xs.push_back(static_cast<double>(row.edges));
    ys.push_back(row.detect_seconds);
  }
  if (rep.rows.size() >= 2) {
    linear_fit(xs, ys, rep.slope, rep.intercept, rep.r2);
  }
  return rep;
}

namespace {

struct MomentAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  void merge(const MomentAcc& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    double m = mean();
    double var = sum_sq / static_cast<double>(n) - m * m;
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ull);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

TheoremTrialResult run_theorem_trial(const TheoremTrialSpec& spec) {
  int T = spec.history_len;
  if (T < 1 || static_cast<int>(spec.d_star.size()) != T) {
    throw DataError("theorem trial: d_star size must equal history_len");
  }
  WeightVector wv = compute_weights(spec.d_star);
  double max_w = *std::max_element(wv.w.begin(), wv.w.end());
  double max_d = *std::max_element(spec.d_star.begin(), spec.d_star.end());

  std::vector<double> mu(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    int sgn = spec.bias_sign.empty() ? 1 : spec.bias_sign[static_cast<size_t>(t)];
    mu[static_cast<size_t>(t)] = spec.mu_target + sgn * spec.bias_const * spec.d_star[static_cast<size_t>(t)];
  }

  std::mt19937_64 rng(mix_seed(spec.seed, 0x7472ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  MomentAcc acc;
  for (long trial = 0; trial < spec.n_trials; ++trial) {
    double est = 0.0;
    for (int t = 0; t < T; ++t) {
      est += wv.w[static_cast<size_t>(t)] * (mu[static_cast<size_t>(t)] + spec.sigma * gauss(rng));
    }
    double target = spec.mu_target + spec.sigma * gauss(rng);
    double err = est - target;
    acc.add(err * err);
  }

  TheoremTrialResult res;
  res.mse = acc.mean();
  res.se = acc.se();
  res.max_weight = max_w;
  res.max_cd = spec.bias_const * max_d;
  res.lower_bound = spec.sigma * spec.sigma;
  res.upper_bound = (1.0 + max_w) * spec.sigma * spec.sigma + res.max_cd;
  res.pass = res.mse >= res.lower_bound - 3.0 * res.se && res.mse <= res.upper_bound + 3.0 * res.se;
  return res;
}

TheoremValidationReport validate_theorems(long n_trials, std::uint64_t seed, int threads) {
  if (n_trials < 1000) throw DataError("validate_theorems: need at least 1000 trials");
  TheoremValidationReport rep;

  // Ten seeded bound specs. c * max d* stays <= 1, the regime in which the
  // stated upper bound is valid (the bias-squared term is bounded by the
  // linear one only there).
  std::mt19937_64 meta(mix_seed(seed, 0x5350ull));
  std::uniform_int_distribution<int> t_pick(5, 40);
  std::uniform_real_distribution<double> sigma_pick(0.5, 2.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  rep.bounds_pass = true;
  for (int i = 0; i < 10; ++i) {
    TheoremTrialSpec ts;
    ts.history_len = t_pick(meta);
    ts.sigma = sigma_pick(meta);
    ts.bias_const = u01(meta);
    ts.mu_target = 2.0 * u01(meta) - 1.0;
    ts.n_trials = n_trials;
    ts.seed = mix_seed(seed, 0x1000ull + static_cast<std::uint64_t>(i));
    for (int t = 0; t < ts.history_len; ++t) {
      ts.d_star.push_back(u01(meta));
      ts.bias_sign.push_back(u01(meta) < 0.5 ? -1 : 1);
    }
    TheoremTrialResult r = run_theorem_trial(ts);
    rep.bounds_pass = rep.bounds_pass && r.pass;
    rep.bound_trials.push_back(r);
  }

  // T = 1 with d* = 0: the estimator is the single sample, MSE = 2 sigma^2
  // and the (1 + max w) sigma^2 bound is tight.
  {
    TheoremTrialSpec ts;
    ts.history_len = 1;
    ts.sigma = 1.0;
    ts.bias_const = 0.0;
    ts.d_star = {0.0};
    ts.bias_sign = {1};
    ts.n_trials = n_trials;
    ts.seed = mix_seed(seed, 0x2000ull);
    rep.single_tick = run_theorem_trial(ts);
  }

  // Infinite-data trend with common random numbers: one stream of draws per
  // trial serves every T through prefix means, so the T-to-T comparison is
  // far less noisy than independent runs.
  const std::vector<int> t_values = {10, 100, 1000, 10000};
  const int t_max = t_values.back();
  const double sigma = 1.0;
  rep.trend_sigma = sigma;
  // Fixed chunk grid so the result does not depend on the worker count.
  const int n_chunks = 16;
  long per_chunk = (n_trials + n_chunks - 1) / n_chunks;

  struct ChunkOut {
    std::vector<MomentAcc> mse;  // per T value
    MomentAcc est_mean;          // estimator at largest T
  };
  auto run_chunk = [&](int chunk) {
    ChunkOut out;
    out.mse.resize(t_values.size());
    std::mt19937_64 rng(mix_seed(seed, 0x3000ull + static_cast<std::uint64_t>(chunk)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    long lo = static_cast<long>(chunk) * per_chunk;
    long hi = std::min(n_trials, lo + per_chunk);
    for (long trial = lo; trial < hi; ++trial) {
      double target = sigma * gauss(rng);  // x_{T+1} - mu, shared across T
      double running = 0.0;
      size_t ti = 0;
      for (int t = 1; t <= t_max && ti < t_values.size(); ++t) {
        running += sigma * gauss(rng);
        if (t == t_values[ti]) {
          double est = running / static_cast<double>(t);
          double err = est - target;
          out.mse[ti].add(err * err);
          if (ti + 1 == t_values.size()) out.est_mean.add(est);
          ++ti;
        }
      }
    }
    return out;
  };

  int workers = std::max(1, threads);
  std::vector<ChunkOut> chunk_out(n_chunks);
  {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
        chunk_out[static_cast<size_t>(c)] = run_chunk(c);
      }
    };
    std::vector<std::future<void>> pool;
    for (int w = 1; w < workers; ++w) pool.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : pool) f.get();
  }
  ChunkOut total;
  total.mse.resize(t_values.size());
  for (const ChunkOut& part : chunk_out) {  // merge in chunk order
    for (size_t i = 0; i < total.mse.size(); ++i) total.mse[i].merge(part.mse[i]);
    total.est_mean.merge(part.est_mean);
  }

  rep.exact_pass = true;
  for (size_t i = 0; i < t_values.size(); ++i) {
    TrendPoint p;
    p.history_len = t_values[i];
    p.mse = total.mse[i].mean();
    p.se = total.mse[i].se();
    rep.trend.push_back(p);
    double exact = sigma * sigma * (1.0 + 1.0 / static_cast<double>(t_values[i]));
    if (std::abs(p.mse - exact) > 0.01 * exact) rep.exact_pass = false;
  }
  rep.monotone_pass = true;
  for (size_t i = 1; i < rep.trend.size(); ++i) {
    if (!(rep.trend[i].mse < rep.trend[i - 1].mse)) rep.monotone_pass = false;
  }
  rep.estimator_mean = total.est_mean.mean();
  rep.estimator_mean_se = total.est_mean.se();
  rep.unbiased_pass = std::abs(rep.estimator_mean - 0.0) <= 4.0 * rep.estimator_mean_se;

  rep.all_pass = rep.bounds_pass && rep.single_tick.pass && rep.exact_pass && rep.monotone_pass &&
                 rep.unbiased_pass;
  return rep;
}

}  // namespace dynwatch
