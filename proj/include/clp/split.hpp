#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "clp/error.hpp"
#include "clp/network.hpp"
#include "clp/rng.hpp"

namespace clp {

// Partition of one row's columns. train and calib are disjoint and together
// cover the observed off-diagonal columns; test holds the columns under test.
struct RowSplit {
  Index row = 0;
  IndexSet train;
  IndexSet calib;
  IndexSet test;
};

struct TestBlockPlan {
  Index row = 0;
  std::vector<IndexSet> blocks;
  Index r1 = 0;
};

// Per-hypothesis calibration subsets; subsets[b] belongs to block[b].
struct CalibAllocation {
  IndexSet block;
  std::vector<IndexSet> subsets;
};

inline IndexSet observed_columns(const MissingMask& mask, Index i0) {
  IndexSet out;
  for (Index j = 0; j < mask.n_cols(); ++j)
    if (mask.observed(i0, j)) out.push_back(j);
  return out;
}

inline IndexSet missing_columns(const MissingMask& mask, Index i0) {
  IndexSet out;
  for (Index j = 0; j < mask.n_cols(); ++j)
    if (mask.missing(i0, j)) out.push_back(j);
  return out;
}

// Random train/calib split of the observed columns of row i0. `test` is
// carried through unchanged.
inline RowSplit split_row(Index i0, const MissingMask& mask, double ratio_train, Rng& rng, IndexSet test) {
  if (!(ratio_train > 0.0 && ratio_train < 1.0)) throw ConfigError("ratio_train: must lie in (0,1)");
  IndexSet obs = observed_columns(mask, i0);
  if (obs.size() < 2)
    throw RowDegenerateError("row " + std::to_string(i0) + " has " + std::to_string(obs.size()) +
                             " observed entries; at least 2 are needed");
  shuffle(obs, rng);
  auto n_train = static_cast<Index>(std::lround(ratio_train * static_cast<double>(obs.size())));
  n_train = std::clamp<Index>(n_train, 1, obs.size() - 1);

  RowSplit s;
  s.row = i0;
  s.train.assign(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.calib.assign(obs.begin() + static_cast<std::ptrdiff_t>(n_train), obs.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.calib.begin(), s.calib.end());
  s.test = std::move(test);
  return s;
}

inline RowSplit split_row(Index i0, const MissingMask& mask, double ratio_train, Rng& rng) {
  return split_row(i0, mask, ratio_train, rng, missing_columns(mask, i0));
}

// Deal the shuffled test columns into ceil(|test| / r1) blocks whose sizes
// differ by at most one, r1 = floor(|calib| / r0).
inline TestBlockPlan plan_test_blocks(const RowSplit& split, Index r0, Rng& rng) {
  if (r0 == 0) throw ConfigError("r0: must be positive");
  if (split.calib.size() < r0)
    throw InsufficientCalibrationError("row " + std::to_string(split.row) + ": |calib| = " +
                                       std::to_string(split.calib.size()) + " < r0 = " + std::to_string(r0));
  TestBlockPlan plan;
  plan.row = split.row;
  plan.r1 = split.calib.size() / r0;
  if (split.test.empty()) return plan;

  IndexSet test = split.test;
  shuffle(test, rng);
  const Index k = (test.size() + plan.r1 - 1) / plan.r1;
  const Index base = test.size() / k;
  const Index extra = test.size() % k;
  auto it = test.begin();
  for (Index b = 0; b < k; ++b) {
    const Index size = base + (b < extra ? 1 : 0);
    IndexSet block(it, it + static_cast<std::ptrdiff_t>(size));
    std::sort(block.begin(), block.end());
    plan.blocks.push_back(std::move(block));
    it += static_cast<std::ptrdiff_t>(size);
  }
  return plan;
}

// Each j0 in the block gets floor(|calib| / |block|) shuffled calibration
// columns; leftovers stay unassigned.
inline CalibAllocation allocate_calibration(const RowSplit& split, const IndexSet& block, Index r0, Rng& rng) {
  if (block.empty()) return {};
  const Index per = split.calib.size() / block.size();
  if (per < r0 || per == 0)
    throw InsufficientCalibrationError("row " + std::to_string(split.row) + ": block of " +
                                       std::to_string(block.size()) + " leaves " + std::to_string(per) +
                                       " calibration columns per hypothesis, r0 = " + std::to_string(r0));
  IndexSet calib = split.calib;
  shuffle(calib, rng);
  CalibAllocation a;
  a.block = block;
  a.subsets.reserve(block.size());
  for (Index b = 0; b < block.size(); ++b) {
    IndexSet sub(calib.begin() + static_cast<std::ptrdiff_t>(b * per),
                 calib.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
    std::sort(sub.begin(), sub.end());
    a.subsets.push_back(std::move(sub));
  }
  return a;
}

// {i in candidate_rows : every (i, j), j in columns, is observed}.
inline IndexSet fully_observed_rows(const MissingMask& mask, const IndexSet& candidate_rows, const IndexSet& columns) {
  IndexSet out;
  for (Index i : candidate_rows) {
    bool full = true;
    for (Index j : columns)
      if (!mask.observed(i, j)) {
        full = false;
        break;
      }
    if (full) out.push_back(i);
  }
  return out;
}

// Rows of Omega_{j0} observed on both j2 and j. Shared by every j1 of the
// block, which is why j1 is not a parameter.
inline IndexSet omega_triplet(const MissingMask& mask, const IndexSet& omega_j0, Index j2, Index j) {
  IndexSet out;
  for (Index i : omega_j0)
    if (mask.observed(i, j2) && mask.observed(i, j)) out.push_back(i);
  return out;
}

// All rows except i0: the bipartite candidate set.
inline IndexSet all_rows_except(Index n_rows, Index i0) {
  IndexSet out;
  out.reserve(n_rows);
  for (Index i = 0; i < n_rows; ++i)
    if (i != i0) out.push_back(i);
  return out;
}

}  // namespace clp
