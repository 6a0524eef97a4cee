#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "clp/error.hpp"
#include "clp/estimator.hpp"
#include "clp/network.hpp"
#include "clp/rng.hpp"
#include "clp/split.hpp"

namespace clp {

// Conformal p-value m / (1 + |calib|), kept as an exact rational.
struct PValue {
  std::uint32_t num = 1;
  std::uint32_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend std::strong_ordering operator<=>(const PValue& a, const PValue& b) noexcept {
    return static_cast<std::uint64_t>(a.num) * b.den <=> static_cast<std::uint64_t>(b.num) * a.den;
  }
  friend bool operator==(const PValue& a, const PValue& b) noexcept { return (a <=> b) == 0; }
};

// S(a_hat; z) = z - a_hat
inline double nonconformity(double a_hat, double z) noexcept { return z - a_hat; }

struct TieCount {
  std::size_t compared = 0;
  std::size_t tied = 0;
};

// (1 + #{calib < test} + U) / (1 + |calib|), U uniform on {0..#ties}: the
// test score takes a uniformly random rank inside its tie group, which is
// what an infinitesimal random perturbation of all scores would give.
inline PValue conformal_pvalue(std::span<const double> calib_scores, double test_score, Rng& tie_rng,
                               TieCount* ties = nullptr) {
  if (calib_scores.empty()) throw InternalError("conformal_pvalue: empty calibration set");
  std::uint32_t below = 0, tied = 0;
  for (double s : calib_scores) {
    if (s < test_score)
      ++below;
    else if (s == test_score)
      ++tied;
  }
  if (tied > 0) below += static_cast<std::uint32_t>(uniform_index(tie_rng, tied + 1ULL));
  if (ties) {
    ties->compared += calib_scores.size();
    ties->tied += tied;
  }
  return {1 + below, 1 + static_cast<std::uint32_t>(calib_scores.size())};
}

// p <= alpha * l / m, exact for rationals up to the rounding of alpha.
inline bool bh_passes(double p, double alpha, std::size_t l, std::size_t m) noexcept {
  return p <= alpha * static_cast<double>(l) / static_cast<double>(m);
}
inline bool bh_passes(const PValue& p, double alpha, std::size_t l, std::size_t m) noexcept {
  return static_cast<double>(p.num) * static_cast<double>(m) <=
         alpha * static_cast<double>(l) * static_cast<double>(p.den);
}

struct BhResult {
  std::size_t l_hat = 0;
  // Positions into the input, ascending.
  std::vector<std::size_t> rejected;
};

// Step-up BH. Rejects the l_hat smallest p-values, i.e. every p <= p_(l_hat);
// ties with p_(l_hat) are rejected together.
template <typename P>
BhResult bh_procedure(std::span<const P> pvalues, double alpha) {
  BhResult out;
  const std::size_t m = pvalues.size();
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  for (std::size_t l = m; l >= 1; --l) {
    if (bh_passes(pvalues[order[l - 1]], alpha, l, m)) {
      out.l_hat = l;
      break;
    }
  }
  if (out.l_hat == 0) return out;
  const P cut = pvalues[order[out.l_hat - 1]];
  for (std::size_t k = 0; k < m; ++k)
    if (!(cut < pvalues[k])) out.rejected.push_back(k);
  return out;
}

template <typename P>
BhResult bh_procedure(const std::vector<P>& pvalues, double alpha) {
  return bh_procedure(std::span<const P>(pvalues), alpha);
}

struct PValueRecord {
  Coordinate at;
  std::size_t block = 0;
  PValue p;
  std::size_t calib_size = 0;
  double threshold = 0.0;
};

struct LocalRejection {
  Index row = 0;
  std::size_t block = 0;
  double alpha_bh = 0.0;
  IndexSet rejected;  // column indices
  std::size_t l_hat = 0;
};

struct LocalDiagnostics {
  std::size_t hypotheses = 0;
  std::size_t empty_omega = 0;
  std::size_t fallbacks = 0;
  std::size_t kernel_underflows = 0;
  std::size_t omega_total = 0;
  TieCount ties;

  LocalDiagnostics& operator+=(const LocalDiagnostics& o) {
    hypotheses += o.hypotheses;
    empty_omega += o.empty_omega;
    fallbacks += o.fallbacks;
    kernel_underflows += o.kernel_underflows;
    omega_total += o.omega_total;
    ties.compared += o.ties.compared;
    ties.tied += o.ties.tied;
    return *this;
  }
};

// Which rows may enter Omega_{j0}.
enum class OmegaCandidates {
  train_rows,       // directed and undirected: I_train of row i0
  all_other_rows,   // bipartite: every row except i0
};

// Conformal p-values of one test block: for each j0, predict row i0 on
// calib(j0) + {j0}, score calibration columns against their observed values
// and j0 against its threshold.
inline std::vector<PValueRecord> local_pvalues(const WeightedNetwork& a, const MissingMask& mask,
                                               const RowSplit& split, const CalibAllocation& alloc,
                                               std::span<const double> thresholds, const KernelSpec& kernel,
                                               OmegaCandidates candidates, std::size_t block_id, Rng& tie_rng,
                                               LocalDiagnostics* diag = nullptr) {
  const Index i0 = split.row;
  if (thresholds.size() != alloc.block.size()) throw InternalError("local_pvalues: threshold count mismatch");
  if (alloc.subsets.size() != alloc.block.size()) throw InternalError("local_pvalues: allocation mismatch");
  const IndexSet rows =
      candidates == OmegaCandidates::train_rows ? split.train : all_rows_except(mask.n_rows(), i0);

  std::vector<PValueRecord> out;
  out.reserve(alloc.block.size());
  std::vector<double> calib_scores;
  for (std::size_t b = 0; b < alloc.block.size(); ++b) {
    const Index j0 = alloc.block[b];
    IndexSet columns = alloc.subsets[b];
    columns.push_back(j0);
    const auto est = estimate_block(a, mask, i0, split.train, columns, rows, kernel);

    calib_scores.resize(alloc.subsets[b].size());
    for (std::size_t c = 0; c < calib_scores.size(); ++c)
      calib_scores[c] = nonconformity(est.a_hat[c], a(i0, columns[c]));
    const double test_score = nonconformity(est.a_hat.back(), thresholds[b]);

    TieCount ties;
    const PValue p = conformal_pvalue(calib_scores, test_score, tie_rng, &ties);
    out.push_back({{i0, j0}, block_id, p, calib_scores.size(), thresholds[b]});

    if (diag) {
      ++diag->hypotheses;
      diag->omega_total += est.omega_size;
      if (est.omega_size == 0) ++diag->empty_omega;
      if (est.fallback) ++diag->fallbacks;
      diag->kernel_underflows += est.underflows;
      diag->ties.compared += ties.compared;
      diag->ties.tied += ties.tied;
    }
  }
  return out;
}

inline LocalRejection bh_on_block(std::span<const PValueRecord> records, double alpha_bh) {
  LocalRejection r;
  r.alpha_bh = alpha_bh;
  if (records.empty()) return r;
  r.row = records.front().at.row;
  r.block = records.front().block;
  std::vector<PValue> ps;
  ps.reserve(records.size());
  for (const auto& rec : records) ps.push_back(rec.p);
  const auto bh = bh_procedure(std::span<const PValue>(ps), alpha_bh);
  r.l_hat = bh.l_hat;
  for (auto k : bh.rejected) r.rejected.push_back(records[k].at.col);
  return r;
}

struct LocalTestResult {
  LocalRejection rejection;
  std::vector<PValueRecord> pvalues;
};

// One run of the local test on a block: p-values, then BH at alpha_bh.
inline LocalTestResult local_test(const WeightedNetwork& a, const MissingMask& mask, const RowSplit& split,
                                  const CalibAllocation& alloc, std::span<const double> thresholds,
                                  const KernelSpec& kernel, double alpha_bh, Rng& rng,
                                  OmegaCandidates candidates = OmegaCandidates::train_rows, std::size_t block_id = 0,
                                  LocalDiagnostics* diag = nullptr) {
  if (!(alpha_bh > 0.0 && alpha_bh < 1.0)) throw ConfigError("alpha_bh: must lie in (0,1)");
  LocalTestResult out;
  out.pvalues = local_pvalues(a, mask, split, alloc, thresholds, kernel, candidates, block_id, rng, diag);
  out.rejection = bh_on_block(out.pvalues, alpha_bh);
  out.rejection.row = split.row;
  out.rejection.block = block_id;
  return out;
}

}  // namespace clp
