#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "clp/split.hpp"
#include "support.hpp"

using namespace clp;

namespace {

RowSplit make_split(Index calib, Index test) {
  RowSplit s;
  s.row = 0;
  for (Index k = 0; k < calib; ++k) s.calib.push_back(1000 + k);
  for (Index k = 0; k < test; ++k) s.test.push_back(k + 1);
  s.train = {5000};
  return s;
}

}  // namespace

TEST(SplitRow, TwoToThreeRatio) {
  // Row 0 observes columns 2..101; column 1 is missing.
  DenseMatrix<std::uint8_t> bits(102, 102, 0);
  bits(0, 1) = 1;
  const MissingMask m(bits, false);
  Rng rng(1);
  const auto s = split_row(0, m, 0.4, rng);
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_EQ(s.calib.size(), 60u);
  EXPECT_EQ(s.test, (IndexSet{1}));
}

TEST(SplitRow, SmallRowSplitsOneAndOne) {
  DenseMatrix<std::uint8_t> bits(4, 4, 0);
  bits(0, 3) = 1;
  const MissingMask m(bits, false);
  Rng rng(2);
  const auto s = split_row(0, m, 0.5, rng);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.calib.size(), 1u);
}

TEST(SplitRow, FullyMissingRowIsDegenerate) {
  DenseMatrix<std::uint8_t> bits(5, 5, 0);
  for (Index j = 0; j < 5; ++j) bits(2, j) = 1;
  Rng rng(3);
  EXPECT_THROW(split_row(2, MissingMask(bits, false), 0.4, rng), RowDegenerateError);
}

TEST(SplitRow, PartitionInvariantsOnRandomMasks) {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = ref::random_mask(30, 30, 0.3, false, g);
    Rng rng(trial);
    const Index i0 = static_cast<Index>(trial % 30);
    const auto s = split_row(i0, m, 0.4, rng);
    std::set<Index> train(s.train.begin(), s.train.end()), calib(s.calib.begin(), s.calib.end());
    for (Index j : s.train) EXPECT_FALSE(calib.count(j));
    std::set<Index> obs;
    for (Index j = 0; j < 30; ++j)
      if (m.observed(i0, j)) obs.insert(j);
    std::set<Index> both = train;
    both.insert(calib.begin(), calib.end());
    EXPECT_EQ(both, obs);
    EXPECT_FALSE(both.count(i0));
    for (Index j : s.test) EXPECT_TRUE(m.missing(i0, j));
    EXPECT_EQ(s.test.size(), static_cast<std::size_t>(std::count_if(
                                 s.test.begin(), s.test.end(), [&](Index j) { return m.missing(i0, j); })));
  }
}

TEST(SplitRow, DeterministicGivenRngState) {
  std::mt19937_64 g(1);
  const auto m = ref::random_mask(40, 40, 0.2, false, g);
  Rng a(11), b(11);
  const auto s1 = split_row(3, m, 0.4, a);
  const auto s2 = split_row(3, m, 0.4, b);
  EXPECT_EQ(s1.train, s2.train);
  EXPECT_EQ(s1.calib, s2.calib);
}

TEST(PlanTestBlocks, WorkedExample) {
  Rng rng(1);
  const auto plan = plan_test_blocks(make_split(60, 5), 25, rng);
  EXPECT_EQ(plan.r1, 2u);
  ASSERT_EQ(plan.blocks.size(), 3u);
  std::vector<std::size_t> sizes;
  for (const auto& b : plan.blocks) sizes.push_back(b.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 2, 2}));
}

TEST(PlanTestBlocks, SingleTestEntry) {
  Rng rng(1);
  const auto plan = plan_test_blocks(make_split(60, 1), 25, rng);
  ASSERT_EQ(plan.blocks.size(), 1u);
  EXPECT_EQ(plan.blocks[0], (IndexSet{1}));
}

TEST(PlanTestBlocks, TooSmallCalibration) {
  Rng rng(1);
  EXPECT_THROW(plan_test_blocks(make_split(24, 3), 25, rng), InsufficientCalibrationError);
}

TEST(PlanTestBlocks, ExhaustiveSmallCases) {
  // Independent arithmetic: r1 = floor(C / r0), k = ceil(T / r1), sizes
  // within one of each other, all <= r1, partition of the test set.
  for (Index r0 = 1; r0 <= 8; ++r0)
    for (Index calib = r0; calib <= 40; ++calib)
      for (Index test = 0; test <= 25; ++test) {
        Rng rng(calib * 1000 + test * 10 + r0);
        const auto plan = plan_test_blocks(make_split(calib, test), r0, rng);
        Index r1 = 0;
        while ((r1 + 1) * r0 <= calib) ++r1;
        ASSERT_EQ(plan.r1, r1);
        Index k = 0;
        while (k * r1 < test) ++k;
        ASSERT_EQ(plan.blocks.size(), k);
        std::multiset<Index> seen;
        std::size_t lo = test, hi = 0;
        for (const auto& b : plan.blocks) {
          ASSERT_LE(b.size(), r1);
          lo = std::min(lo, b.size());
          hi = std::max(hi, b.size());
          seen.insert(b.begin(), b.end());
        }
        if (test) { ASSERT_LE(hi - lo, 1u); }
        std::multiset<Index> expected;
        for (Index t = 1; t <= test; ++t) expected.insert(t);
        ASSERT_EQ(seen, expected);
      }
}

TEST(AllocateCalibration, EvenDivision) {
  Rng rng(4);
  const auto a = allocate_calibration(make_split(60, 2), {1, 2}, 25, rng);
  ASSERT_EQ(a.subsets.size(), 2u);
  EXPECT_EQ(a.subsets[0].size(), 30u);
  EXPECT_EQ(a.subsets[1].size(), 30u);
  std::set<Index> all(a.subsets[0].begin(), a.subsets[0].end());
  for (Index j : a.subsets[1]) EXPECT_FALSE(all.count(j));
}

TEST(AllocateCalibration, SingleHypothesisGetsEverything) {
  Rng rng(4);
  const auto s = make_split(60, 1);
  const auto a = allocate_calibration(s, {1}, 25, rng);
  ASSERT_EQ(a.subsets.size(), 1u);
  EXPECT_EQ(a.subsets[0], s.calib);
}

TEST(AllocateCalibration, TooLargeBlock) {
  Rng rng(4);
  EXPECT_THROW(allocate_calibration(make_split(50, 3), {1, 2, 3}, 25, rng), InsufficientCalibrationError);
}

TEST(AllocateCalibration, DisjointSubsetsOfCalibration) {
  for (Index calib = 10; calib <= 60; calib += 7)
    for (Index b = 1; b <= calib / 5; ++b) {
      const auto s = make_split(calib, b);
      Rng rng(calib + b);
      const auto a = allocate_calibration(s, s.test, 5, rng);
      std::set<Index> used;
      for (const auto& sub : a.subsets) {
        EXPECT_EQ(sub.size(), calib / b);
        for (Index j : sub) {
          EXPECT_TRUE(used.insert(j).second);
          EXPECT_TRUE(std::binary_search(s.calib.begin(), s.calib.end(), j));
        }
      }
    }
}

TEST(FullyObservedRows, Examples) {
  const auto none = MissingMask::none(8, 8, false);
  const IndexSet candidates{1, 2, 5, 6};
  EXPECT_EQ(fully_observed_rows(none, candidates, {3, 4}), candidates);
  DenseMatrix<std::uint8_t> bits(8, 8, 0);
  bits(5, 4) = 1;
  EXPECT_EQ(fully_observed_rows(MissingMask(bits, false), candidates, {3, 4}), (IndexSet{1, 2, 6}));
  // The diagonal counts as unobserved.
  EXPECT_EQ(fully_observed_rows(none, candidates, {2}), (IndexSet{1, 5, 6}));
}

TEST(OmegaTriplet, Examples) {
  const auto none = MissingMask::none(6, 6, false);
  const IndexSet omega{0, 1, 2};
  EXPECT_EQ(omega_triplet(none, omega, 4, 5), omega);
  DenseMatrix<std::uint8_t> bits(6, 6, 0);
  for (Index i : omega) bits(i, 4) = 1;
  EXPECT_TRUE(omega_triplet(MissingMask(bits, false), omega, 4, 5).empty());
}

TEST(OmegaTriplet, MatchesBruteForceScan) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = ref::random_mask(20, 20, 0.3, false, g);
    IndexSet omega;
    for (Index i = 0; i < 20; ++i)
      if (g() % 2) omega.push_back(i);
    const Index j2 = g() % 20, j = (j2 + 1 + g() % 19) % 20;
    IndexSet expected;
    for (Index i = 0; i < 20; ++i) {
      if (!std::binary_search(omega.begin(), omega.end(), i)) continue;
      if (i == j2 || i == j || m.missing(i, j2) || m.missing(i, j)) continue;
      expected.push_back(i);
    }
    EXPECT_EQ(omega_triplet(m, omega, j2, j), expected);
  }
}

TEST(Omega, MonotoneInTheMask) {
  std::mt19937_64 g(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = ref::random_mask(25, 25, 0.15, false, g);
    IndexSet candidates(25);
    std::iota(candidates.begin(), candidates.end(), Index{0});
    const IndexSet cols{static_cast<Index>(g() % 25), static_cast<Index>(g() % 25), static_cast<Index>(g() % 25)};
    const auto before = fully_observed_rows(m, candidates, cols);
    const auto t_before = omega_triplet(m, before, cols[0], cols[1]);
    for (int k = 0; k < 10; ++k) m.set_missing(g() % 25, g() % 25, true);
    const auto after = fully_observed_rows(m, candidates, cols);
    EXPECT_TRUE(std::includes(before.begin(), before.end(), after.begin(), after.end()));
    const auto t_after = omega_triplet(m, after, cols[0], cols[1]);
    EXPECT_TRUE(std::includes(t_before.begin(), t_before.end(), t_after.begin(), t_after.end()));
  }
}

TEST(AllRowsExcept, Basic) {
  EXPECT_EQ(all_rows_except(4, 2), (IndexSet{0, 1, 3}));
  EXPECT_EQ(all_rows_except(2, 0), (IndexSet{1}));
}
