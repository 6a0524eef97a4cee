#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clp/conformal.hpp"
#include "clp/error.hpp"
#include "clp/estimator.hpp"
#include "clp/network.hpp"
#include "clp/parallel.hpp"
#include "clp/rng.hpp"
#include "clp/split.hpp"

namespace clp {

// e_j = |block| * 1{j in R} / ((|R| v 1) * alpha_bh), aligned with `block`.
inline std::vector<double> decisions_to_evalues(const IndexSet& block, const LocalRejection& rejection,
                                                double alpha_bh) {
  std::vector<double> e(block.size(), 0.0);
  const double r = static_cast<double>(std::max<std::size_t>(rejection.rejected.size(), 1));
  const double hit = static_cast<double>(block.size()) / (r * alpha_bh);
  for (std::size_t b = 0; b < block.size(); ++b)
    if (std::find(rejection.rejected.begin(), rejection.rejected.end(), block[b]) != rejection.rejected.end())
      e[b] = hit;
  return e;
}

// Entrywise mean over repetitions.
inline std::vector<double> derandomise(std::span<const std::vector<double>> runs) {
  if (runs.empty()) throw InternalError("derandomise: no runs");
  std::vector<double> out(runs.front().size(), 0.0);
  for (const auto& r : runs) {
    if (r.size() != out.size()) throw InternalError("derandomise: runs cover different blocks");
    for (std::size_t k = 0; k < r.size(); ++k) out[k] += r[k];
  }
  for (auto& x : out) x /= static_cast<double>(runs.size());
  return out;
}

inline double inflation_factor(double c, double alpha_bh) noexcept { return c / alpha_bh; }

// Inflated e-value: the local-test e-value scaled by c / alpha_bh.
inline double inflate(double e_bar, double c, double alpha_bh) noexcept {
  return e_bar * inflation_factor(c, alpha_bh);
}

struct ScoredCoordinate {
  Coordinate at;
  double e = 0.0;
};

struct GlobalRejection {
  double alpha_ebh = 0.0;
  std::size_t k_hat = 0;
  std::vector<Coordinate> rejected;  // row-major
  double threshold = 0.0;            // n_total / (alpha_ebh * k_hat); +inf when k_hat = 0

  bool operator==(const GlobalRejection&) const = default;
};

inline bool ebh_passes(double e, std::size_t n_total, double alpha, std::size_t k) noexcept {
  return e >= static_cast<double>(n_total) / (alpha * static_cast<double>(k));
}

// e-BH: k_hat = max{k : e_(k) >= n_total / (alpha k)}, reject the k_hat
// largest. n_total counts every tested coordinate, including ones absent
// from `evalues` (they carry e = 0).
inline GlobalRejection ebh_procedure(std::span<const ScoredCoordinate> evalues, double alpha, std::size_t n_total) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha_ebh: must lie in (0,1)");
  if (n_total < evalues.size()) throw InternalError("ebh_procedure: n_total smaller than the number of e-values");
  GlobalRejection g;
  g.alpha_ebh = alpha;
  g.threshold = std::numeric_limits<double>::infinity();
  std::vector<ScoredCoordinate> sorted(evalues.begin(), evalues.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.e != b.e) return a.e > b.e;
    return a.at < b.at;
  });
  for (std::size_t k = sorted.size(); k >= 1; --k) {
    if (ebh_passes(sorted[k - 1].e, n_total, alpha, k)) {
      g.k_hat = k;
      break;
    }
  }
  if (g.k_hat == 0) return g;
  g.threshold = static_cast<double>(n_total) / (alpha * static_cast<double>(g.k_hat));
  for (std::size_t k = 0; k < g.k_hat; ++k) g.rejected.push_back(sorted[k].at);
  std::sort(g.rejected.begin(), g.rejected.end());
  return g;
}

struct ClpParams {
  double ratio_train = 0.4;  // |train| : |calib| = 2 : 3
  Index r0 = 25;
  double alpha_bh = 0.1;
  double alpha_ebh = 0.2;
  // nullopt: e-values enter e-BH as computed by the local tests.
  std::optional<double> inflate_c = 1.0;
  std::size_t m_reps = 20;
  // Optional per-row repetition counts, indexed by row; 0 means m_reps.
  std::vector<std::size_t> row_reps;
  KernelSpec kernel;
  TopologyMode topology = TopologyMode::directed;
  unsigned threads = 1;
  bool record_splits = false;

  std::size_t reps_for(Index row) const { return row < row_reps.size() && row_reps[row] > 0 ? row_reps[row] : m_reps; }

  void validate() const {
    if (!(ratio_train > 0.0 && ratio_train < 1.0)) throw ConfigError("ratio_train: must lie in (0,1)");
    if (r0 == 0) throw ConfigError("r0: must be positive");
    if (!(alpha_bh > 0.0 && alpha_bh < 1.0)) throw ConfigError("alpha_bh: must lie in (0,1)");
    if (!(alpha_ebh > 0.0 && alpha_ebh < 1.0)) throw ConfigError("alpha_ebh: must lie in (0,1)");
    if (inflate_c && !(*inflate_c >= 0.0 && std::isfinite(*inflate_c)))
      throw ConfigError("inflate_c: must be a finite nonnegative number");
    if (m_reps == 0) throw ConfigError("reps: must be positive");
    kernel.validate();
  }
};

struct SplitRecord {
  std::size_t rep = 0;
  RowSplit split;
  CalibAllocation allocation;
};

struct BlockOutcome {
  IndexSet columns;
  // One entry per repetition; nullopt when the repetition was skipped.
  std::vector<std::optional<std::vector<PValueRecord>>> reps;
  std::vector<SplitRecord> splits;  // filled when ClpParams::record_splits
};

struct RowOutcome {
  Index row = 0;
  IndexSet tested;
  std::vector<double> thresholds;  // aligned with tested
  bool starved = false;
  std::string reason;
  Index r1 = 0;
  std::vector<BlockOutcome> blocks;
};

struct ClpDiagnostics {
  std::size_t tested = 0;
  std::size_t starved_rows = 0;
  std::size_t skipped_reps = 0;
  std::size_t empty_blocks = 0;
  LocalDiagnostics local;
  std::vector<std::string> warnings;
};

// Everything that does not depend on alpha: splits, predictions, p-values.
struct LocalResults {
  Index n_rows = 0;
  Index n_cols = 0;
  TopologyMode topology = TopologyMode::directed;
  std::vector<Coordinate> tested;
  std::vector<RowOutcome> rows;
  ClpDiagnostics diagnostics;
};

namespace detail {

inline OmegaCandidates candidates_for(TopologyMode mode) {
  return mode == TopologyMode::bipartite ? OmegaCandidates::all_other_rows : OmegaCandidates::train_rows;
}

inline void validate_inputs(const WeightedNetwork& a, const MissingMask& mask, const HypothesisThresholds& th,
                            TopologyMode mode) {
  require_same_shape(a, mask);
  if (mode == TopologyMode::bipartite) {
    if (!a.diagonal_defined()) throw ValidationError("bipartite mode: network must be a bipartite incidence matrix");
  } else {
    if (a.diagonal_defined() || a.n_rows() != a.n_cols())
      throw ValidationError(std::string(to_string(mode)) + " mode: network must be square without self-loops");
  }
  if (mode == TopologyMode::undirected) {
    if (!mask.is_symmetric()) throw ValidationError("undirected mode: mask is not symmetric");
    for (Index i = 0; i < a.n_rows(); ++i)
      for (Index j = i + 1; j < a.n_cols(); ++j)
        if (mask.observed(i, j) && a(i, j) != a(j, i))
          throw ValidationError("undirected mode: network is not symmetric at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
  }
  for (const auto& e : th.entries()) {
    if (e.at.row >= mask.n_rows() || e.at.col >= mask.n_cols() || !mask.missing(e.at.row, e.at.col))
      throw ValidationError("thresholds: (" + std::to_string(e.at.row) + "," + std::to_string(e.at.col) +
                            ") is not a missing entry");
    if (mode == TopologyMode::undirected && e.at.row >= e.at.col)
      throw ValidationError("undirected mode: thresholds must sit in the upper triangle");
  }
}

inline void run_row(const WeightedNetwork& a, const MissingMask& mask, const ClpParams& params, const SeedTree& seeds,
                    RowOutcome& row, ClpDiagnostics& diag) {
  const Index i0 = row.row;
  const auto tree = seeds.child("row", i0);
  const auto observed = observed_columns(mask, i0).size();
  if (observed < params.r0 + 1) {
    row.starved = true;
    row.reason = "row " + std::to_string(i0) + ": " + std::to_string(observed) + " observed entries < r0 + 1";
    return;
  }

  TestBlockPlan plan;
  try {
    auto rng = tree.stream("initial-split");
    const auto first = split_row(i0, mask, params.ratio_train, rng, row.tested);
    auto brng = tree.stream("blocks");
    plan = plan_test_blocks(first, params.r0, brng);
  } catch (const InsufficientCalibrationError& e) {
    row.starved = true;
    row.reason = e.what();
    return;
  } catch (const RowDegenerateError& e) {
    row.starved = true;
    row.reason = e.what();
    return;
  }
  row.r1 = plan.r1;

  std::vector<double> block_thresholds;
  const auto candidates = candidates_for(params.topology);
  const std::size_t m = params.reps_for(i0);
  for (std::size_t k0 = 0; k0 < plan.blocks.size(); ++k0) {
    BlockOutcome out;
    out.columns = plan.blocks[k0];
    block_thresholds.clear();
    for (Index j : out.columns) {
      const auto pos = std::lower_bound(row.tested.begin(), row.tested.end(), j) - row.tested.begin();
      block_thresholds.push_back(row.thresholds[static_cast<std::size_t>(pos)]);
    }
    out.reps.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
      const auto rep = tree.child("rep", k0, l);
      std::optional<RowSplit> split;
      std::optional<CalibAllocation> alloc;
      for (int attempt = 0; attempt < 2 && !alloc; ++attempt) {
        auto srng = rep.stream(attempt == 0 ? "split" : "split-retry");
        auto arng = rep.stream(attempt == 0 ? "alloc" : "alloc-retry");
        split = split_row(i0, mask, params.ratio_train, srng, row.tested);
        try {
          alloc = allocate_calibration(*split, out.columns, params.r0, arng);
        } catch (const InsufficientCalibrationError&) {
        }
      }
      if (!alloc) {
        ++diag.skipped_reps;
        continue;
      }
      auto trng = rep.stream("ties");
      out.reps[l] = local_pvalues(a, mask, *split, *alloc, block_thresholds, params.kernel, candidates, k0, trng,
                                  &diag.local);
      if (params.record_splits) out.splits.push_back({l, *split, *alloc});
    }
    row.blocks.push_back(std::move(out));
  }
}

}  // namespace detail

// Splits, predictions and conformal p-values for every tested coordinate;
// the tested set is the domain of `thresholds`.
inline LocalResults compute_local(const WeightedNetwork& a, const MissingMask& mask,
                                  const HypothesisThresholds& thresholds, const ClpParams& params,
                                  std::uint64_t seed) {
  params.validate();
  detail::validate_inputs(a, mask, thresholds, params.topology);

  LocalResults res;
  res.n_rows = a.n_rows();
  res.n_cols = a.n_cols();
  res.topology = params.topology;
  for (const auto& e : thresholds.entries()) res.tested.push_back(e.at);
  res.diagnostics.tested = res.tested.size();

  for (const auto& e : thresholds.entries()) {
    if (res.rows.empty() || res.rows.back().row != e.at.row) {
      res.rows.emplace_back();
      res.rows.back().row = e.at.row;
    }
    res.rows.back().tested.push_back(e.at.col);
    res.rows.back().thresholds.push_back(e.c);
  }

  const SeedTree seeds(seed);
  std::vector<ClpDiagnostics> per_row(res.rows.size());
  parallel_for(res.rows.size(), params.threads,
               [&](std::size_t k) { detail::run_row(a, mask, params, seeds, res.rows[k], per_row[k]); });

  auto& d = res.diagnostics;
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    d.skipped_reps += per_row[k].skipped_reps;
    d.local += per_row[k].local;
    if (res.rows[k].starved) {
      ++d.starved_rows;
      d.warnings.push_back("skipped " + res.rows[k].reason);
    }
  }
  return res;
}

struct EValueRecord {
  Coordinate at;
  double e_bar = 0.0;  // derandomised local-test e-value
  double e = 0.0;      // value entering e-BH (after inflation)
  std::size_t reps = 0;
  std::size_t block_size = 0;
  double inflation = 1.0;
};

struct ClpResult {
  GlobalRejection rejection;
  std::vector<EValueRecord> evalues;  // row-major, one per tested coordinate
  ClpDiagnostics diagnostics;
};

// BH per block and repetition, e-values, averaging, inflation and e-BH.
inline ClpResult aggregate(const LocalResults& local, double alpha_bh, double alpha_ebh,
                           std::optional<double> inflate_c) {
  if (!(alpha_bh > 0.0 && alpha_bh < 1.0)) throw ConfigError("alpha_bh: must lie in (0,1)");
  ClpResult out;
  out.diagnostics = local.diagnostics;
  const double factor = inflate_c ? inflation_factor(*inflate_c, alpha_bh) : 1.0;
  out.evalues.reserve(local.tested.size());

  for (const auto& row : local.rows) {
    if (row.starved) {
      for (Index j : row.tested) out.evalues.push_back({{row.row, j}, 0.0, 0.0, 0, 0, factor});
      continue;
    }
    for (const auto& block : row.blocks) {
      std::vector<std::vector<double>> runs;
      runs.reserve(block.reps.size());
      for (const auto& rep : block.reps) {
        if (!rep) {
          runs.emplace_back(block.columns.size(), 0.0);
          continue;
        }
        const auto rej = bh_on_block(*rep, alpha_bh);
        runs.push_back(decisions_to_evalues(block.columns, rej, alpha_bh));
      }
      const auto e_bar = derandomise(runs);
      const double cap = static_cast<double>(block.columns.size()) / alpha_bh;
      for (std::size_t b = 0; b < block.columns.size(); ++b) {
        if (e_bar[b] > cap * (1.0 + 1e-12)) throw InternalError("e-value exceeds |block| / alpha_bh");
        out.evalues.push_back(
            {{row.row, block.columns[b]}, e_bar[b], e_bar[b] * factor, runs.size(), block.columns.size(), factor});
      }
    }
  }
  std::sort(out.evalues.begin(), out.evalues.end(), [](const auto& x, const auto& y) { return x.at < y.at; });

  std::vector<ScoredCoordinate> scored;
  scored.reserve(out.evalues.size());
  for (const auto& r : out.evalues) scored.push_back({r.at, r.e});
  out.rejection = ebh_procedure(scored, alpha_ebh, local.tested.size());
  return out;
}

// Conformal link prediction over every coordinate in `thresholds`.
inline ClpResult clp_global(const WeightedNetwork& a, const MissingMask& mask, const HypothesisThresholds& thresholds,
                            const ClpParams& params, std::uint64_t seed) {
  const auto local = compute_local(a, mask, thresholds, params, seed);
  auto res = aggregate(local, params.alpha_bh, params.alpha_ebh, params.inflate_c);
  if (params.inflate_c && *params.inflate_c > 1.0)
    res.diagnostics.warnings.push_back("inflate_c > 1: e-values are inflated beyond the local-test scale");
  return res;
}

}  // namespace clp
