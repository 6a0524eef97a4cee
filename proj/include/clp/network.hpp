#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clp/error.hpp"

namespace clp {

using Index = std::size_t;
using IndexSet = std::vector<Index>;

// Row-major dense matrix.
template <typename T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  T& operator()(Index i, Index j) noexcept { return data_[i * cols_ + j]; }
  const T& operator()(Index i, Index j) const noexcept { return data_[i * cols_ + j]; }

  std::span<T> row(Index i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(Index i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<T> data_;
};

enum class TopologyMode { directed, undirected, bipartite };

inline std::string_view to_string(TopologyMode m) {
  switch (m) {
    case TopologyMode::directed: return "directed";
    case TopologyMode::undirected: return "undirected";
    case TopologyMode::bipartite: return "bipartite";
  }
  return "?";
}

inline TopologyMode parse_topology(std::string_view s) {
  if (s == "directed") return TopologyMode::directed;
  if (s == "undirected") return TopologyMode::undirected;
  if (s == "bipartite") return TopologyMode::bipartite;
  throw ConfigError("topology: unknown mode '" + std::string(s) + "'");
}

struct Coordinate {
  Index row = 0;
  Index col = 0;
  auto operator<=>(const Coordinate&) const = default;
};

// Edge weights. Square networks without self-loops keep a sentinel on the
// diagonal that no operation reads.
class WeightedNetwork {
 public:
  WeightedNetwork() = default;
  WeightedNetwork(DenseMatrix<double> weights, bool diagonal_defined)
      : weights_(std::move(weights)), diagonal_defined_(diagonal_defined) {
    if (weights_.rows() == 0 || weights_.cols() == 0) throw ValidationError("network: empty matrix");
    if (!diagonal_defined_ && weights_.rows() != weights_.cols())
      throw ValidationError("network: a network without self-loops must be square");
    for (Index i = 0; i < n_rows(); ++i)
      for (Index j = 0; j < n_cols(); ++j)
        if (has_cell(i, j) && !std::isfinite(weights_(i, j)))
          throw ValidationError("network: non-finite weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }

  // Square, no self-loops.
  static WeightedNetwork square(DenseMatrix<double> w) { return {std::move(w), false}; }
  // Rectangular bipartite incidence.
  static WeightedNetwork bipartite(DenseMatrix<double> w) { return {std::move(w), true}; }

  Index n_rows() const noexcept { return weights_.rows(); }
  Index n_cols() const noexcept { return weights_.cols(); }
  bool diagonal_defined() const noexcept { return diagonal_defined_; }
  bool has_cell(Index i, Index j) const noexcept { return diagonal_defined_ || i != j; }

  double operator()(Index i, Index j) const noexcept { return weights_(i, j); }
  const DenseMatrix<double>& weights() const noexcept { return weights_; }

  bool operator==(const WeightedNetwork&) const = default;

 private:
  DenseMatrix<double> weights_;
  bool diagonal_defined_ = false;
};

struct LatentPositions {
  std::vector<double> xi;
  std::optional<std::vector<double>> zeta;  // bipartite column positions

  // Position of the node behind column j.
  double column(Index j) const { return zeta ? (*zeta)[j] : xi[j]; }
};

// 1 = missing. The diagonal of a square no-self-loop network is neither
// missing nor observed.
class MissingMask {
 public:
  MissingMask() = default;
  MissingMask(DenseMatrix<std::uint8_t> bits, bool diagonal_defined)
      : bits_(std::move(bits)), diagonal_defined_(diagonal_defined) {
    for (auto b : bits_.data())
      if (b > 1) throw ValidationError("mask: entries must be 0 or 1");
    if (!diagonal_defined_) {
      if (bits_.rows() != bits_.cols()) throw ValidationError("mask: a mask without self-loops must be square");
      for (Index i = 0; i < bits_.rows(); ++i) bits_(i, i) = 0;
    }
  }

  static MissingMask none(Index rows, Index cols, bool diagonal_defined) {
    return {DenseMatrix<std::uint8_t>(rows, cols, 0), diagonal_defined};
  }

  Index n_rows() const noexcept { return bits_.rows(); }
  Index n_cols() const noexcept { return bits_.cols(); }
  bool diagonal_defined() const noexcept { return diagonal_defined_; }
  bool has_cell(Index i, Index j) const noexcept { return diagonal_defined_ || i != j; }

  bool missing(Index i, Index j) const noexcept { return bits_(i, j) != 0; }
  bool observed(Index i, Index j) const noexcept { return bits_(i, j) == 0 && has_cell(i, j); }

  void set_missing(Index i, Index j, bool m) {
    if (!has_cell(i, j)) return;
    bits_(i, j) = m ? 1 : 0;
  }

  const DenseMatrix<std::uint8_t>& bits() const noexcept { return bits_; }

  std::size_t missing_count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.data().begin(), bits_.data().end(), std::uint8_t{1}));
  }

  bool is_symmetric() const noexcept {
    if (n_rows() != n_cols()) return false;
    for (Index i = 0; i < n_rows(); ++i)
      for (Index j = i + 1; j < n_cols(); ++j)
        if (bits_(i, j) != bits_(j, i)) return false;
    return true;
  }

  bool operator==(const MissingMask&) const = default;

 private:
  DenseMatrix<std::uint8_t> bits_;
  bool diagonal_defined_ = false;
};

inline void require_same_shape(const WeightedNetwork& a, const MissingMask& m) {
  if (a.n_rows() != m.n_rows() || a.n_cols() != m.n_cols())
    throw ValidationError("mask shape " + std::to_string(m.n_rows()) + "x" + std::to_string(m.n_cols()) +
                          " does not match network " + std::to_string(a.n_rows()) + "x" + std::to_string(a.n_cols()));
  if (a.diagonal_defined() != m.diagonal_defined()) throw ValidationError("mask and network disagree on self-loops");
}

// Unobserved links in row-major order; undirected mode keeps i<j only.
inline std::vector<Coordinate> test_coordinates(const MissingMask& mask,
                                                TopologyMode mode = TopologyMode::directed) {
  std::vector<Coordinate> out;
  for (Index i = 0; i < mask.n_rows(); ++i)
    for (Index j = (mode == TopologyMode::undirected ? i + 1 : 0); j < mask.n_cols(); ++j)
      if (mask.missing(i, j)) out.push_back({i, j});
  return out;
}

struct ThresholdEntry {
  Coordinate at;
  double c = 0.0;
  // Ground truth (signal > c); only meaningful for simulated or held-out data.
  bool alternative = false;
};

// Thresholds c_{i,j} on the test set, sorted row-major.
class HypothesisThresholds {
 public:
  HypothesisThresholds() = default;
  explicit HypothesisThresholds(std::vector<ThresholdEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    for (std::size_t k = 1; k < entries_.size(); ++k)
      if (entries_[k].at == entries_[k - 1].at) throw ValidationError("thresholds: duplicate coordinate");
  }

  const std::vector<ThresholdEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const ThresholdEntry* find(Coordinate at) const noexcept {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), at,
                               [](const ThresholdEntry& e, const Coordinate& c) { return e.at < c; });
    return (it != entries_.end() && it->at == at) ? &*it : nullptr;
  }

  std::size_t alternatives() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.alternative; }));
  }

 private:
  std::vector<ThresholdEntry> entries_;
};

}  // namespace clp
