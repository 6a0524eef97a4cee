#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clp/error.hpp"
#include "clp/network.hpp"
#include "clp/rng.hpp"

namespace clp {

enum class GraphonFamily { setting1, setting2, setting3, threshold_binary, rescaled_bernoulli, custom };

inline std::string_view to_string(GraphonFamily f) {
  switch (f) {
    case GraphonFamily::setting1: return "setting1";
    case GraphonFamily::setting2: return "setting2";
    case GraphonFamily::setting3: return "setting3";
    case GraphonFamily::threshold_binary: return "threshold-binary";
    case GraphonFamily::rescaled_bernoulli: return "rescaled-bernoulli";
    case GraphonFamily::custom: return "custom";
  }
  return "?";
}

inline GraphonFamily parse_graphon_family(std::string_view s) {
  if (s == "setting1") return GraphonFamily::setting1;
  if (s == "setting2") return GraphonFamily::setting2;
  if (s == "setting3") return GraphonFamily::setting3;
  if (s == "threshold-binary") return GraphonFamily::threshold_binary;
  if (s == "rescaled-bernoulli") return GraphonFamily::rescaled_bernoulli;
  if (s == "custom") return GraphonFamily::custom;
  throw ConfigError("graphon.family: unknown family tag '" + std::string(s) + "'");
}

struct GraphonSpec {
  GraphonFamily family = GraphonFamily::setting1;
  double noise_half_width = 0.1;
  double threshold = 0.0;  // threshold-binary only
  // Smooth graphon behind rescaled-bernoulli probabilities.
  GraphonFamily base = GraphonFamily::setting1;
  // Mirror the upper triangle (undirected simulations).
  bool symmetric = false;
  std::function<double(double, double)> custom;

  void validate() const {
    if (!(noise_half_width >= 0.0) || !std::isfinite(noise_half_width))
      throw ConfigError("graphon.noise: half-width must be a finite nonnegative number");
    if (family == GraphonFamily::custom && !custom) throw ConfigError("graphon.family: custom family needs a function");
    if (family == GraphonFamily::rescaled_bernoulli &&
        (base == GraphonFamily::threshold_binary || base == GraphonFamily::rescaled_bernoulli))
      throw ConfigError("graphon.base: rescaled-bernoulli needs a smooth base graphon");
  }
};

namespace graphons {

inline double setting1(double u, double v) { return u * u * u + 2.0 * v * v * v; }

inline double setting2(double u, double v) {
  const double a = 2.0 * u - 0.5;
  const double b = v - 0.5;
  return std::pow(std::max(u, v), 2.0 / 3.0) * std::cos(0.1 / (a * a * a + b * b * b + 0.01));
}

inline double setting3(double u, double v) {
  const double den = 2.0 * u * u * u * u + v * v * v * v;
  if (den == 0.0) return 0.0;  // bounded cosine times a vanishing prefactor
  return (3.0 * u * u + v * v) * std::cos(1.0 / den);
}

}  // namespace graphons

// E[A_{i,j} | xi_i = u, xi_j = v] for the closed-form families.
inline double graphon_mean(const GraphonSpec& spec, double u, double v) {
  switch (spec.family) {
    case GraphonFamily::setting1: return graphons::setting1(u, v);
    case GraphonFamily::setting2: return graphons::setting2(u, v);
    case GraphonFamily::setting3: return graphons::setting3(u, v);
    case GraphonFamily::threshold_binary: {
      const double m = 0.5 * (u + v);
      const double h = spec.noise_half_width;
      if (h == 0.0) return m > spec.threshold ? 1.0 : 0.0;
      return std::clamp((h - (spec.threshold - m)) / (2.0 * h), 0.0, 1.0);
    }
    case GraphonFamily::rescaled_bernoulli: {
      GraphonSpec b = spec;
      b.family = spec.base;
      return graphon_mean(b, u, v);
    }
    case GraphonFamily::custom: return spec.custom(u, v);
  }
  throw ConfigError("graphon.family: unknown family tag");
}

struct GeneratedNetwork {
  WeightedNetwork network;
  LatentPositions latent;
  // Quantity the hypotheses are about: A itself, or the Bernoulli
  // probabilities for rescaled-bernoulli.
  DenseMatrix<double> signal;
};

namespace detail {

inline GeneratedNetwork generate(const GraphonSpec& spec, Index n_rows, Index n_cols, bool bipartite,
                                 std::uint64_t seed) {
  spec.validate();
  if (n_rows < 2 || n_cols < 1) throw ConfigError("n: network needs at least 2 nodes");
  if (spec.symmetric && bipartite) throw ConfigError("graphon.symmetric: not available for bipartite networks");
  const SeedTree tree(seed);

  LatentPositions latent;
  {
    auto rng = tree.stream("latent-rows");
    latent.xi.resize(n_rows);
    for (auto& x : latent.xi) x = uniform01(rng);
    if (bipartite) {
      auto crng = tree.stream("latent-cols");
      latent.zeta.emplace(n_cols);
      for (auto& x : *latent.zeta) x = uniform01(crng);
    }
  }

  const double h = spec.noise_half_width;
  GraphonSpec f_spec = spec;
  if (spec.family == GraphonFamily::rescaled_bernoulli) f_spec.family = spec.base;

  DenseMatrix<double> raw(n_rows, n_cols, 0.0);
  auto noise = tree.stream("noise");
  for (Index i = 0; i < n_rows; ++i) {
    for (Index j = 0; j < n_cols; ++j) {
      if (!bipartite && i == j) continue;
      if (spec.symmetric && j < i) {
        raw(i, j) = raw(j, i);
        continue;
      }
      const double eps = uniform(noise, -h, h);
      const double u = latent.xi[i];
      const double v = latent.column(j);
      if (spec.family == GraphonFamily::threshold_binary) {
        raw(i, j) = (0.5 * (u + v) + eps > spec.threshold) ? 1.0 : 0.0;
      } else {
        raw(i, j) = graphon_mean(f_spec, u, v) + eps;
      }
    }
  }

  GeneratedNetwork out;
  if (spec.family == GraphonFamily::rescaled_bernoulli) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Index i = 0; i < n_rows; ++i)
      for (Index j = 0; j < n_cols; ++j)
        if (bipartite || i != j) {
          lo = std::min(lo, raw(i, j));
          hi = std::max(hi, raw(i, j));
        }
    const double span = hi - lo;
    DenseMatrix<double> p(n_rows, n_cols, 0.0);
    DenseMatrix<double> a(n_rows, n_cols, 0.0);
    auto coin = tree.stream("bernoulli");
    for (Index i = 0; i < n_rows; ++i)
      for (Index j = 0; j < n_cols; ++j) {
        if (!bipartite && i == j) continue;
        if (spec.symmetric && j < i) {
          p(i, j) = p(j, i);
          a(i, j) = a(j, i);
          continue;
        }
        p(i, j) = span > 0.0 ? std::clamp((raw(i, j) - lo) / span, 0.0, 1.0) : 0.5;
        a(i, j) = bernoulli(coin, p(i, j)) ? 1.0 : 0.0;
      }
    out.network = WeightedNetwork(std::move(a), bipartite);
    out.signal = std::move(p);
  } else {
    out.signal = raw;
    out.network = WeightedNetwork(std::move(raw), bipartite);
  }
  out.latent = std::move(latent);
  return out;
}

}  // namespace detail

// Square graphon network without self-loops: A_{i,j} = f(xi_i, xi_j) + eps_{i,j},
// eps ~ Uniform[-h, h], xi ~ Uniform[0,1].
inline GeneratedNetwork generate_graphon_network(const GraphonSpec& spec, Index n, std::uint64_t seed) {
  return detail::generate(spec, n, n, false, seed);
}

// Bipartite variant A_{i,j} = f(xi_i, zeta_j) + eps_{i,j}.
inline GeneratedNetwork generate_bipartite_network(const GraphonSpec& spec, Index n_rows, Index n_cols,
                                                   std::uint64_t seed) {
  return detail::generate(spec, n_rows, n_cols, true, seed);
}

enum class MissingMode { uniform, heterogeneous_uniform, per_entry, block, staggered };

inline std::string_view to_string(MissingMode m) {
  switch (m) {
    case MissingMode::uniform: return "uniform";
    case MissingMode::heterogeneous_uniform: return "heterogeneous-uniform";
    case MissingMode::per_entry: return "per-entry";
    case MissingMode::block: return "block";
    case MissingMode::staggered: return "staggered";
  }
  return "?";
}

inline MissingMode parse_missing_mode(std::string_view s) {
  if (s == "uniform") return MissingMode::uniform;
  if (s == "heterogeneous-uniform") return MissingMode::heterogeneous_uniform;
  if (s == "per-entry") return MissingMode::per_entry;
  if (s == "block") return MissingMode::block;
  if (s == "staggered") return MissingMode::staggered;
  throw ConfigError("missing.mode: unknown mode '" + std::string(s) + "'");
}

struct MissingSpec {
  MissingMode mode = MissingMode::uniform;
  double q = 0.0;                      // uniform
  double q_lo = 0.0, q_hi = 0.4;       // heterogeneous-uniform
  DenseMatrix<double> q_matrix;        // per-entry
  double row_fraction = 0.2;           // block: fraction of rows in the missing block
  double col_fraction = 0.2;           // block: fraction of columns
  double treated_fraction = 0.3;       // staggered: rows that eventually go missing
  double earliest_start = 0.5;         // staggered: first column (as a fraction) a treated row may start at
  bool symmetric = false;              // mirror the upper triangle

  void validate() const {
    auto prob = [](double p, const char* field) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("missing.") + field + ": probability out of [0,1]");
    };
    switch (mode) {
      case MissingMode::uniform: prob(q, "q"); break;
      case MissingMode::heterogeneous_uniform:
        prob(q_lo, "q_lo");
        prob(q_hi, "q_hi");
        if (q_lo > q_hi) throw ConfigError("missing.q_lo: must not exceed q_hi");
        break;
      case MissingMode::per_entry:
        for (double p : q_matrix.data()) prob(p, "q_matrix");
        break;
      case MissingMode::block:
        prob(row_fraction, "row_fraction");
        prob(col_fraction, "col_fraction");
        break;
      case MissingMode::staggered:
        prob(treated_fraction, "treated_fraction");
        prob(earliest_start, "earliest_start");
        break;
    }
  }
};

namespace detail {

inline IndexSet random_subset(Index n, Index k, Rng& rng) {
  IndexSet all(n);
  for (Index i = 0; i < n; ++i) all[i] = i;
  shuffle(all, rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace detail

// Missingness pattern of the given shape, independent of any network.
inline MissingMask generate_mask(const MissingSpec& spec, Index n_rows, Index n_cols, bool diagonal_defined,
                                 std::uint64_t seed) {
  spec.validate();
  if (spec.mode == MissingMode::per_entry &&
      (spec.q_matrix.rows() != n_rows || spec.q_matrix.cols() != n_cols))
    throw ConfigError("missing.q_matrix: shape does not match the network");
  if (spec.symmetric && n_rows != n_cols) throw ConfigError("missing.symmetric: needs a square network");

  DenseMatrix<std::uint8_t> bits(n_rows, n_cols, 0);
  auto rng = SeedTree(seed).stream("mask");
  auto cell = [&](Index i, Index j) { return diagonal_defined || i != j; };
  auto skip_lower = [&](Index i, Index j) { return spec.symmetric && j < i; };

  switch (spec.mode) {
    case MissingMode::uniform:
    case MissingMode::heterogeneous_uniform:
    case MissingMode::per_entry:
      for (Index i = 0; i < n_rows; ++i)
        for (Index j = 0; j < n_cols; ++j) {
          if (!cell(i, j) || skip_lower(i, j)) continue;
          double q = spec.q;
          if (spec.mode == MissingMode::heterogeneous_uniform) q = uniform(rng, spec.q_lo, spec.q_hi);
          if (spec.mode == MissingMode::per_entry) q = spec.q_matrix(i, j);
          bits(i, j) = bernoulli(rng, q) ? 1 : 0;
        }
      break;
    case MissingMode::block: {
      const auto rows = detail::random_subset(n_rows, static_cast<Index>(std::lround(spec.row_fraction * n_rows)), rng);
      const auto cols = detail::random_subset(n_cols, static_cast<Index>(std::lround(spec.col_fraction * n_cols)), rng);
      for (Index i : rows)
        for (Index j : cols)
          if (cell(i, j)) bits(i, j) = 1;
      break;
    }
    case MissingMode::staggered: {
      // Treated rows go missing from an adoption column onwards, as in panel data.
      const auto rows =
          detail::random_subset(n_rows, static_cast<Index>(std::lround(spec.treated_fraction * n_rows)), rng);
      const auto first = static_cast<Index>(std::floor(spec.earliest_start * n_cols));
      for (Index i : rows) {
        const Index start = first >= n_cols ? n_cols : first + uniform_index(rng, n_cols - first);
        for (Index j = start; j < n_cols; ++j)
          if (cell(i, j)) bits(i, j) = 1;
      }
      break;
    }
  }

  if (spec.symmetric) {
    for (Index i = 0; i < n_rows; ++i)
      for (Index j = i + 1; j < n_cols; ++j) {
        // Structured modes set both halves independently; keep the upper one.
        bits(j, i) = bits(i, j);
      }
  }
  return MissingMask(std::move(bits), diagonal_defined);
}

enum class ThresholdKind { constant, signal, quantile };

struct ThresholdRule {
  ThresholdKind kind = ThresholdKind::constant;
  double value = 0.0;     // constant
  double fraction = 0.3;  // signal: share of test entries made alternatives
  double delta = 1.5;     // signal: c = signal - delta on that share
  double kappa = 0.5;     // quantile level of the observed weights

  static ThresholdRule constant(double v) { return {ThresholdKind::constant, v}; }
  static ThresholdRule signal(double fraction, double delta) {
    ThresholdRule r;
    r.kind = ThresholdKind::signal;
    r.fraction = fraction;
    r.delta = delta;
    return r;
  }
  static ThresholdRule quantile(double kappa) {
    ThresholdRule r;
    r.kind = ThresholdKind::quantile;
    r.kappa = kappa;
    return r;
  }

  void validate() const {
    if (kind == ThresholdKind::signal && !(fraction >= 0.0 && fraction <= 1.0))
      throw ConfigError("thresholds.fraction: must lie in [0,1]");
    if (kind == ThresholdKind::quantile && !(kappa >= 0.0 && kappa <= 1.0))
      throw ConfigError("thresholds.kappa: must lie in [0,1]");
  }
};

// Linear-interpolation quantile of an unsorted sample.
inline double empirical_quantile(std::vector<double> xs, double kappa) {
  if (xs.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = kappa * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

// Thresholds on every test coordinate of `mask`, with ground-truth labels
// (signal > c) taken from the complete `truth` network.
inline HypothesisThresholds build_thresholds(const WeightedNetwork& truth, const MissingMask& mask,
                                             const ThresholdRule& rule, Rng& rng,
                                             TopologyMode mode = TopologyMode::directed,
                                             const DenseMatrix<double>* signal = nullptr) {
  rule.validate();
  require_same_shape(truth, mask);
  auto sig = [&](Index i, Index j) { return signal ? (*signal)(i, j) : truth(i, j); };
  const auto coords = test_coordinates(mask, mode);

  std::vector<ThresholdEntry> entries;
  entries.reserve(coords.size());
  switch (rule.kind) {
    case ThresholdKind::constant:
      for (auto c : coords) entries.push_back({c, rule.value, sig(c.row, c.col) > rule.value});
      break;
    case ThresholdKind::quantile: {
      std::vector<double> obs;
      for (Index i = 0; i < mask.n_rows(); ++i)
        for (Index j = 0; j < mask.n_cols(); ++j)
          if (mask.observed(i, j)) obs.push_back(truth(i, j));
      const double q = empirical_quantile(std::move(obs), rule.kappa);
      for (auto c : coords) entries.push_back({c, q, sig(c.row, c.col) > q});
      break;
    }
    case ThresholdKind::signal: {
      std::vector<std::size_t> order(coords.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      shuffle(order, rng);
      const auto n_alt = static_cast<std::size_t>(std::lround(rule.fraction * static_cast<double>(coords.size())));
      std::vector<bool> shifted(coords.size(), false);
      for (std::size_t k = 0; k < n_alt; ++k) shifted[order[k]] = true;
      for (std::size_t k = 0; k < coords.size(); ++k) {
        const double s = sig(coords[k].row, coords[k].col);
        const double c = shifted[k] ? s - rule.delta : s;
        entries.push_back({coords[k], c, s > c});
      }
      break;
    }
  }
  return HypothesisThresholds(std::move(entries));
}

}  // namespace clp
