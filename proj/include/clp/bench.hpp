#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clp/conformal.hpp"
#include "clp/error.hpp"
#include "clp/evalues.hpp"
#include "clp/generators.hpp"
#include "clp/network.hpp"
#include "clp/parallel.hpp"
#include "clp/rng.hpp"
#include "clp/split.hpp"
#include "clp/topology.hpp"

namespace clp {

struct Score {
  double fdp = 0.0;
  double power = 0.0;
  std::size_t rejected = 0;
  std::size_t false_rejections = 0;
  std::size_t true_rejections = 0;
};

// FDP = false / (|R| v 1), power = true / (alternatives v 1).
inline Score score(std::span<const Coordinate> rejected, const HypothesisThresholds& truth) {
  Score s;
  s.rejected = rejected.size();
  for (const auto& c : rejected) {
    const auto* e = truth.find(c);
    if (!e)
      throw AccountingError("rejected (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                            ") is not in the test set");
    if (e->alternative)
      ++s.true_rejections;
    else
      ++s.false_rejections;
  }
  s.fdp = static_cast<double>(s.false_rejections) / static_cast<double>(std::max<std::size_t>(s.rejected, 1));
  s.power = static_cast<double>(s.true_rejections) / static_cast<double>(std::max<std::size_t>(truth.alternatives(), 1));
  return s;
}

inline Score score(const std::vector<Coordinate>& rejected, const HypothesisThresholds& truth) {
  return score(std::span<const Coordinate>(rejected), truth);
}

// Contrast method: one train/calib split per row, the training-row mean as
// prediction, conformal p-values against the whole calibration set,
// pooled across rows into a single BH run.
inline std::vector<Coordinate> naive_pooled_bh(const WeightedNetwork& a, const MissingMask& mask,
                                               const HypothesisThresholds& thresholds, double ratio_train,
                                               double alpha, std::uint64_t seed) {
  const SeedTree tree(seed);
  std::vector<PValue> ps;
  std::vector<Coordinate> at;
  std::map<Index, std::vector<const ThresholdEntry*>> by_row;
  for (const auto& e : thresholds.entries()) by_row[e.at.row].push_back(&e);
  for (const auto& [i0, entries] : by_row) {
    if (observed_columns(mask, i0).size() < 2) continue;
    auto rng = tree.stream("split", i0);
    const auto split = split_row(i0, mask, ratio_train, rng);
    double mean = 0.0;
    for (Index j : split.train) mean += a(i0, j);
    mean /= static_cast<double>(split.train.size());
    std::vector<double> calib;
    for (Index j : split.calib) calib.push_back(nonconformity(mean, a(i0, j)));
    auto trng = tree.stream("ties", i0);
    for (const auto* e : entries) {
      ps.push_back(conformal_pvalue(calib, nonconformity(mean, e->c), trng));
      at.push_back(e->at);
    }
  }
  const auto bh = bh_procedure(std::span<const PValue>(ps), alpha);
  std::vector<Coordinate> out;
  for (auto k : bh.rejected) out.push_back(at[k]);
  std::sort(out.begin(), out.end());
  return out;
}

enum class ScalePreset { desk, full };

inline MissingSpec heterogeneous(double q_lo, double q_hi) {
  MissingSpec m;
  m.mode = MissingMode::heterogeneous_uniform;
  m.q_lo = q_lo;
  m.q_hi = q_hi;
  return m;
}

struct ExperimentConfig {
  GraphonSpec graphon;
  MissingSpec missing = heterogeneous(0.0, 0.4);
  ThresholdRule thresholds = ThresholdRule::signal(0.3, 1.5);
  TopologyMode topology = TopologyMode::directed;
  ClpParams params;
  Index n = 100;
  Index n_cols = 0;  // bipartite column count; 0 means n
  std::size_t replications = 50;
  std::uint64_t master_seed = 1;
  std::vector<double> alpha_ebh_sweep{0.1, 0.2, 0.3};
  // alpha_bh = ratio * alpha_ebh unless fixed_alpha_bh is set.
  double alpha_bh_ratio = 0.5;
  std::optional<double> fixed_alpha_bh;
  bool naive_baseline = false;
  unsigned threads = 1;

  double alpha_bh_for(double alpha_ebh) const { return fixed_alpha_bh ? *fixed_alpha_bh : alpha_bh_ratio * alpha_ebh; }

  void validate() const {
    graphon.validate();
    missing.validate();
    thresholds.validate();
    params.validate();
    if (n < 2) throw ConfigError("n: must be at least 2");
    if (replications == 0) throw ConfigError("replications: must be positive");
    if (alpha_ebh_sweep.empty()) throw ConfigError("alpha_ebh: sweep is empty");
    for (double a : alpha_ebh_sweep) {
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_ebh: must lie in (0,1)");
      const double b = alpha_bh_for(a);
      if (!(b > 0.0 && b < 1.0)) throw ConfigError("alpha_bh: must lie in (0,1)");
    }
  }
};

// full: n=200, 20 derandomisations, 100 replications. desk: n=100, 5, 50.
// Both: |train|:|calib| = 2:3, r0 = 25, alpha_bh = alpha_ebh / 2.
inline void apply_preset(ExperimentConfig& cfg, ScalePreset preset) {
  cfg.params.ratio_train = 0.4;
  cfg.params.r0 = 25;
  cfg.alpha_bh_ratio = 0.5;
  if (preset == ScalePreset::full) {
    cfg.n = 200;
    cfg.replications = 100;
    cfg.params.m_reps = 20;
  } else {
    cfg.n = 100;
    cfg.replications = 50;
    cfg.params.m_reps = 5;
  }
}

struct MetricRow {
  std::size_t replication = 0;
  std::string method = "clp";
  double alpha_ebh = 0.0;
  double alpha_bh = 0.0;
  double fdp = 0.0;
  double power = 0.0;
  std::size_t rejected = 0;
  std::size_t tested = 0;
  std::size_t alternatives = 0;
  double runtime_ms = 0.0;
  std::string error;  // nonempty when the replication failed
};

struct SummaryRow {
  std::string method;
  double alpha_ebh = 0.0;
  double alpha_bh = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double mean_fdr = 0.0;
  double se_fdr = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  double mean_rejected = 0.0;
};

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::vector<SummaryRow> summary;
};

namespace detail {

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

using Clock = std::chrono::steady_clock;
inline double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

}  // namespace detail

struct SimulatedData {
  GeneratedNetwork generated;
  MissingMask mask;
  HypothesisThresholds thresholds;
};

// Network, mask and thresholds of one replication.
inline SimulatedData simulate(const ExperimentConfig& cfg, const SeedTree& tree) {
  GraphonSpec g = cfg.graphon;
  MissingSpec m = cfg.missing;
  const bool undirected = cfg.topology == TopologyMode::undirected;
  const bool bipartite = cfg.topology == TopologyMode::bipartite;
  if (undirected) g.symmetric = m.symmetric = true;
  SimulatedData d;
  const Index cols = bipartite ? (cfg.n_cols ? cfg.n_cols : cfg.n) : cfg.n;
  d.generated = bipartite ? generate_bipartite_network(g, cfg.n, cols, tree.child("network").key())
                          : generate_graphon_network(g, cfg.n, tree.child("network").key());
  d.mask = generate_mask(m, cfg.n, cols, bipartite, tree.child("mask").key());
  auto rng = tree.stream("thresholds");
  d.thresholds = build_thresholds(d.generated.network, d.mask, cfg.thresholds, rng, cfg.topology,
                                  &d.generated.signal);
  return d;
}

// Same summary as run_experiment produces, from any table of rows.
inline std::vector<SummaryRow> summarise(const std::vector<MetricRow>& rows) {
  std::map<std::pair<std::string, double>, std::vector<const MetricRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.alpha_ebh}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.method = key.first;
    s.alpha_ebh = key.second;
    std::vector<double> fdp, power, rej;
    for (const auto* r : members) {
      s.alpha_bh = r->alpha_bh;
      if (!r->error.empty()) {
        ++s.failures;
        continue;
      }
      fdp.push_back(r->fdp);
      power.push_back(r->power);
      rej.push_back(static_cast<double>(r->rejected));
    }
    s.replications = fdp.size();
    s.mean_fdr = detail::mean(fdp);
    s.se_fdr = detail::stderr_of(fdp);
    s.mean_power = detail::mean(power);
    s.se_power = detail::stderr_of(power);
    s.mean_rejected = detail::mean(rej);
    out.push_back(s);
  }
  return out;
}

// Monte-Carlo FDR / power over replications and an alpha_ebh sweep.
// Deterministic given the master seed, independent of `threads`.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SeedTree root(cfg.master_seed);
  std::vector<std::vector<MetricRow>> per_rep(cfg.replications);

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const auto tree = root.child("replication", r);
    auto& out = per_rep[r];
    auto fail_all = [&](const std::string& what) {
      for (double a : cfg.alpha_ebh_sweep) {
        MetricRow row;
        row.replication = r;
        row.alpha_ebh = a;
        row.alpha_bh = cfg.alpha_bh_for(a);
        row.fdp = row.power = std::numeric_limits<double>::quiet_NaN();
        row.error = what;
        out.push_back(row);
      }
    };
    try {
      auto t0 = detail::Clock::now();
      const auto data = simulate(cfg, tree);
      const double t_generate = detail::ms_since(t0);

      ClpParams params = cfg.params;
      params.topology = cfg.topology;
      params.threads = 1;
      t0 = detail::Clock::now();
      const auto local = compute_local(data.generated.network, data.mask, data.thresholds, params,
                                       tree.child("clp").key());
      const double t_local = detail::ms_since(t0);

      for (double a : cfg.alpha_ebh_sweep) {
        t0 = detail::Clock::now();
        const double abh = cfg.alpha_bh_for(a);
        const auto res = aggregate(local, abh, a, params.inflate_c);
        const auto s = score(res.rejection.rejected, data.thresholds);
        const double t_agg = detail::ms_since(t0);
        out.push_back({r, "clp", a, abh, s.fdp, s.power, s.rejected, data.thresholds.size(),
                       data.thresholds.alternatives(), t_generate + t_local + t_agg, ""});
      }
      if (cfg.naive_baseline) {
        for (double a : cfg.alpha_ebh_sweep) {
          t0 = detail::Clock::now();
          const auto rej = naive_pooled_bh(data.generated.network, data.mask, data.thresholds,
                                           params.ratio_train, a, tree.child("naive").key());
          const auto s = score(rej, data.thresholds);
          out.push_back({r, "naive", a, a, s.fdp, s.power, s.rejected, data.thresholds.size(),
                         data.thresholds.alternatives(), t_generate + detail::ms_since(t0), ""});
        }
      }
    } catch (const Error& e) {
      out.clear();
      fail_all(e.what());
    }
  });

  ExperimentResult res;
  for (auto& v : per_rep)
    for (auto& row : v) res.rows.push_back(std::move(row));
  res.summary = summarise(res.rows);
  return res;
}

struct HoldoutResult {
  MetricRow metrics;
  ClpResult clp;
  MissingMask mask;
  HypothesisThresholds thresholds;
};

// Mask a random fraction of a complete network as pseudo-missing, test the
// held-out entries, score against the hidden values.
inline HoldoutResult run_holdout(const WeightedNetwork& complete, double fraction, const ThresholdRule& rule,
                                 const ClpParams& params, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("holdout.fraction: must lie in [0,1]");
  const SeedTree tree(seed);
  const auto t0 = detail::Clock::now();
  HoldoutResult out;
  MissingSpec ms;
  ms.mode = MissingMode::uniform;
  ms.q = fraction;
  ms.symmetric = params.topology == TopologyMode::undirected;
  out.mask = generate_mask(ms, complete.n_rows(), complete.n_cols(), complete.diagonal_defined(),
                           tree.child("mask").key());
  auto rng = tree.stream("thresholds");
  out.thresholds = build_thresholds(complete, out.mask, rule, rng, params.topology);
  out.clp = clp_global(complete, out.mask, out.thresholds, params, tree.child("clp").key());
  const auto s = score(out.clp.rejection.rejected, out.thresholds);
  out.metrics = {0,          "clp",         params.alpha_ebh,         params.alpha_bh,
                 s.fdp,      s.power,       s.rejected,               out.thresholds.size(),
                 out.thresholds.alternatives(), detail::ms_since(t0), ""};
  return out;
}

}  // namespace clp
