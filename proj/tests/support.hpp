#pragma once

// Independent reference implementations and random-instance helpers shared by
// the test binaries. Nothing here calls the library code it is compared to.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "clp/network.hpp"

namespace clp::ref {

// Quadratic BH: l_hat = max{l : #{p <= alpha l / m} >= l}; reject p <= alpha l_hat / m.
inline std::vector<std::size_t> bh_reference(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::size_t l_hat = 0;
  for (std::size_t l = 1; l <= m; ++l) {
    std::size_t below = 0;
    for (double x : p)
      if (x <= alpha * static_cast<double>(l) / static_cast<double>(m)) ++below;
    if (below >= l) l_hat = l;
  }
  std::vector<std::size_t> out;
  if (l_hat == 0) return out;
  for (std::size_t k = 0; k < m; ++k)
    if (p[k] <= alpha * static_cast<double>(l_hat) / static_cast<double>(m)) out.push_back(k);
  return out;
}

// Quadratic e-BH: k_hat = max{k : #{e >= n/(alpha k)} >= k}; reject e >= n/(alpha k_hat).
inline std::vector<std::size_t> ebh_reference(const std::vector<double>& e, double alpha, std::size_t n_total) {
  std::size_t k_hat = 0;
  for (std::size_t k = 1; k <= e.size(); ++k) {
    std::size_t above = 0;
    for (double x : e)
      if (x >= static_cast<double>(n_total) / (alpha * static_cast<double>(k))) ++above;
    if (above >= k) k_hat = k;
  }
  std::vector<std::size_t> out;
  if (k_hat == 0) return out;
  for (std::size_t k = 0; k < e.size(); ++k)
    if (e[k] >= static_cast<double>(n_total) / (alpha * static_cast<double>(k_hat))) out.push_back(k);
  return out;
}

inline MissingMask random_mask(Index rows, Index cols, double q, bool diagonal_defined, std::mt19937_64& g) {
  std::bernoulli_distribution miss(q);
  DenseMatrix<std::uint8_t> bits(rows, cols, 0);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) bits(i, j) = miss(g) ? 1 : 0;
  return MissingMask(std::move(bits), diagonal_defined);
}

inline WeightedNetwork random_network(Index rows, Index cols, bool diagonal_defined, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  DenseMatrix<double> w(rows, cols, 0.0);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) w(i, j) = u(g);
  return WeightedNetwork(std::move(w), diagonal_defined);
}

// Scalar-loop version of the kernel predictor for the columns of one block:
// Omega by scanning every candidate row, triplet sets by scanning Omega,
// pairwise dissimilarities averaged over the included triplets, Gaussian
// weights with the 1e-300 floor, row-mean fallbacks.
inline std::vector<double> brute_force_predictions(const WeightedNetwork& a, const MissingMask& mask, Index i0,
                                                   const IndexSet& train, const IndexSet& columns,
                                                   const IndexSet& candidates, double bandwidth) {
  double row_mean = 0.0;
  for (Index j : train) row_mean += a(i0, j);
  row_mean /= static_cast<double>(train.size());

  IndexSet omega;
  for (Index i : candidates) {
    bool ok = true;
    for (Index j : columns) ok = ok && !mask.missing(i, j) && (mask.diagonal_defined() || i != j);
    if (ok) omega.push_back(i);
  }
  if (omega.empty()) return std::vector<double>(columns.size(), row_mean);

  auto obs = [&](Index i, Index j) { return !mask.missing(i, j) && (mask.diagonal_defined() || i != j); };
  // d[c][t], nullopt when train column t is excluded
  std::vector<std::vector<std::optional<double>>> d(columns.size(), std::vector<std::optional<double>>(train.size()));
  for (std::size_t t2 = 0; t2 < train.size(); ++t2) {
    const Index j2 = train[t2];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const Index j1 = columns[c];
      double sum = 0.0;
      std::size_t terms = 0;
      for (Index j : train) {
        if (j == j2) continue;
        double dot = 0.0;
        std::size_t size = 0;
        for (Index i : omega) {
          if (!obs(i, j2) || !obs(i, j)) continue;
          dot += (a(i, j1) - a(i, j2)) * a(i, j);
          ++size;
        }
        if (size == 0) continue;
        sum += std::abs(dot) / static_cast<double>(size);
        ++terms;
      }
      if (terms > 0) d[c][t2] = sum / static_cast<double>(terms);
    }
  }

  std::vector<double> out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double num = 0.0, den = 0.0, plain = 0.0;
    std::size_t included = 0;
    for (std::size_t t = 0; t < train.size(); ++t) {
      if (!d[c][t]) continue;
      const double x = *d[c][t] / bandwidth;
      double w = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
      if (w < 1e-300) w = 0.0;
      num += w * a(i0, train[t]);
      den += w;
      plain += a(i0, train[t]);
      ++included;
    }
    if (included == 0)
      out.push_back(row_mean);
    else if (den == 0.0)
      out.push_back(plain / static_cast<double>(included));
    else
      out.push_back(num / den);
  }
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(x.size()) -
                             static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

// Asymptotic two-sample KS critical value at level 0.01.
inline double ks_critical_01(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double std_error(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace clp::ref
