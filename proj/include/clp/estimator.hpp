#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clp/error.hpp"
#include "clp/network.hpp"
#include "clp/split.hpp"

namespace clp {

struct KernelSpec {
  // Only the Gaussian kernel is provided.
  double bandwidth = 1.0;
  // Use the median finite dissimilarity of the block instead of `bandwidth`.
  bool auto_bandwidth = false;

  void validate() const {
    if (!auto_bandwidth && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
      throw ConfigError("kernel.bandwidth: must be a positive finite number");
  }
};

// Weights below this are treated as zero.
inline constexpr double kKernelFloor = 1e-300;

inline double gaussian_kernel(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// |<A[omega, j1] - A[omega, j2], A[omega, j]>| / |omega|; nullopt when omega
// is empty (the term is left out of the pairwise average).
inline std::optional<double> dissim_triplet(const WeightedNetwork& a, std::span<const Index> omega, Index j1,
                                            Index j2, Index j) {
  if (omega.empty()) return std::nullopt;
  double dot = 0.0;
  for (Index i : omega) dot += (a(i, j1) - a(i, j2)) * a(i, j);
  return std::abs(dot) / static_cast<double>(omega.size());
}

// Row i0 plus the column groups the dissimilarities of one hypothesis j0
// are built from.
struct BlockContext {
  Index row = 0;
  IndexSet train;
  IndexSet omega;  // fully observed rows over calib(j0) + {j0}
};

// Mean of dissim_triplet over j in train \ {j2} with a nonempty triplet set.
inline std::optional<double> dissim_pair(const WeightedNetwork& a, const MissingMask& mask, const BlockContext& ctx,
                                         Index j1, Index j2) {
  double sum = 0.0;
  std::size_t terms = 0;
  for (Index j : ctx.train) {
    if (j == j2) continue;
    const auto rows = omega_triplet(mask, ctx.omega, j2, j);
    if (auto d = dissim_triplet(a, rows, j1, j2, j)) {
      sum += *d;
      ++terms;
    }
  }
  if (terms == 0) return std::nullopt;
  return sum / static_cast<double>(terms);
}

struct Prediction {
  double value = 0.0;
  bool underflow = false;  // every kernel weight fell below the floor
};

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Kernel-weighted average of `values` with weights K(d / bandwidth); entries
// whose dissimilarity is nullopt are excluded. Requires at least one included
// entry.
inline Prediction predict_entry(std::span<const double> values, std::span<const std::optional<double>> dissim,
                                double bandwidth) {
  if (values.size() != dissim.size()) throw InternalError("predict_entry: size mismatch");
  double num = 0.0, den = 0.0, plain = 0.0;
  std::size_t included = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!dissim[k]) continue;
    ++included;
    plain += values[k];
    double w = gaussian_kernel(*dissim[k] / bandwidth);
    if (w < kKernelFloor) w = 0.0;
    num += w * values[k];
    den += w;
  }
  if (included == 0) throw InternalError("predict_entry: no included training column");
  if (den == 0.0) return {plain / static_cast<double>(included), true};
  return {num / den, false};
}

struct BlockEstimate {
  // Predictions for the requested columns, in order.
  std::vector<double> a_hat;
  std::size_t omega_size = 0;
  // Omega was empty or no training column survived: every column got the
  // plain training-row mean.
  bool fallback = false;
  std::size_t underflows = 0;
  double bandwidth = 1.0;
};

// Predictions of A[i0, j1] for every j1 in `columns` (calib(j0) + {j0}).
// Omega and the excluded training columns are computed once and shared by all
// j1, so the predictions are a symmetric function of the columns.
inline BlockEstimate estimate_block(const WeightedNetwork& a, const MissingMask& mask, Index i0,
                                    const IndexSet& train, const IndexSet& columns, const IndexSet& candidate_rows,
                                    const KernelSpec& kernel) {
  BlockEstimate out;
  const Index n_train = train.size();
  const Index n_cols = columns.size();
  if (n_train == 0) throw InternalError("estimate_block: empty training set");

  std::vector<double> train_values(n_train);
  for (Index t = 0; t < n_train; ++t) train_values[t] = a(i0, train[t]);
  const double row_mean = mean_of(train_values);

  const IndexSet omega = fully_observed_rows(mask, candidate_rows, columns);
  out.omega_size = omega.size();
  if (omega.empty()) {
    out.fallback = true;
    out.a_hat.assign(n_cols, row_mean);
    return out;
  }

  const Index w = omega.size();
  Eigen::MatrixXd xc(w, n_cols);
  Eigen::MatrixXd xt(w, n_train);
  Eigen::MatrixXd ot(w, n_train);
  for (Index r = 0; r < w; ++r) {
    const Index i = omega[r];
    for (Index c = 0; c < n_cols; ++c) xc(r, c) = a(i, columns[c]);
    for (Index t = 0; t < n_train; ++t) {
      const bool obs = mask.observed(i, train[t]);
      ot(r, t) = obs ? 1.0 : 0.0;
      xt(r, t) = obs ? a(i, train[t]) : 0.0;
    }
  }

  // counts(j, j2) = |Omega_{., j2, j}|
  const Eigen::MatrixXd counts = ot.transpose() * ot;
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_cols, n_train);
  std::vector<std::size_t> terms(n_train, 0);
  Eigen::MatrixXd y(w, n_train);
  for (Index b = 0; b < n_train; ++b) {
    // y(i, j) = A_{i,j} on rows observed at both j2 = train[b] and j.
    y = ot.col(b).asDiagonal() * xt;
    const Eigen::MatrixXd p = xc.transpose() * y;               // sum_i A_{i,j1} A_{i,j}
    const Eigen::RowVectorXd s = xt.col(b).transpose() * y;     // sum_i A_{i,j2} A_{i,j}
    for (Index t = 0; t < n_train; ++t) {
      if (t == b) continue;
      const double cnt = counts(t, b);
      if (cnt <= 0.0) continue;
      ++terms[b];
      for (Index c = 0; c < n_cols; ++c) sums(c, b) += std::abs(p(c, t) - s(t)) / cnt;
    }
  }

  std::vector<Index> kept;
  for (Index b = 0; b < n_train; ++b)
    if (terms[b] > 0) kept.push_back(b);
  if (kept.empty()) {
    out.fallback = true;
    out.a_hat.assign(n_cols, row_mean);
    return out;
  }

  Eigen::MatrixXd d(n_cols, kept.size());
  for (Index k = 0; k < kept.size(); ++k)
    d.col(k) = sums.col(kept[k]) / static_cast<double>(terms[kept[k]]);

  double h = kernel.bandwidth;
  if (kernel.auto_bandwidth) {
    std::vector<double> all(d.data(), d.data() + d.size());
    auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
    std::nth_element(all.begin(), mid, all.end());
    h = *mid > 0.0 ? *mid : 1.0;
  }
  out.bandwidth = h;

  out.a_hat.resize(n_cols);
  for (Index c = 0; c < n_cols; ++c) {
    double num = 0.0, den = 0.0, plain = 0.0;
    for (Index k = 0; k < kept.size(); ++k) {
      const double v = train_values[kept[k]];
      double wk = gaussian_kernel(d(c, k) / h);
      if (wk < kKernelFloor) wk = 0.0;
      num += wk * v;
      den += wk;
      plain += v;
    }
    if (den == 0.0) {
      ++out.underflows;
      out.a_hat[c] = plain / static_cast<double>(kept.size());
    } else {
      out.a_hat[c] = num / den;
    }
  }
  return out;
}

using Graphon = std::function<double(double, double)>;

// Midpoint-rule profiles g_x(v) = int_0^1 f(u, x) f(u, v) du on a fixed grid;
// the oracle dissimilarity of two slices is the L1 distance of their profiles.
class OracleSlices {
 public:
  OracleSlices(Graphon f, std::size_t resolution) : f_(std::move(f)), res_(resolution) {
    if (res_ == 0) throw ConfigError("oracle.resolution: must be positive");
    grid_.resize(res_);
    for (std::size_t k = 0; k < res_; ++k) grid_[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(res_);
    fuv_.resize(res_ * res_);
    for (std::size_t a = 0; a < res_; ++a)
      for (std::size_t b = 0; b < res_; ++b) fuv_[a * res_ + b] = f_(grid_[a], grid_[b]);
  }

  std::vector<double> profile(double x) const {
    std::vector<double> fx(res_);
    for (std::size_t a = 0; a < res_; ++a) fx[a] = f_(grid_[a], x);
    std::vector<double> g(res_, 0.0);
    const double du = 1.0 / static_cast<double>(res_);
    for (std::size_t a = 0; a < res_; ++a)
      for (std::size_t b = 0; b < res_; ++b) g[b] += fx[a] * fuv_[a * res_ + b] * du;
    return g;
  }

  double distance(const std::vector<double>& g1, const std::vector<double>& g2) const {
    double s = 0.0;
    for (std::size_t b = 0; b < res_; ++b) s += std::abs(g1[b] - g2[b]);
    return s / static_cast<double>(res_);
  }

  double dissim(double x1, double x2) const { return distance(profile(x1), profile(x2)); }

 private:
  Graphon f_;
  std::size_t res_;
  std::vector<double> grid_;
  std::vector<double> fuv_;
};

// int_0^1 | int_0^1 { f(u, x1) - f(u, x2) } f(u, v) du | dv by the midpoint rule.
inline double oracle_dissim(const Graphon& f, double x1, double x2, std::size_t resolution = 400) {
  return OracleSlices(f, resolution).dissim(x1, x2);
}

// Oracle prediction for the given columns of row i0: kernel weights from the
// graphon-slice dissimilarity of the latent column positions.
inline std::vector<double> oracle_predict(const WeightedNetwork& a, const Graphon& f, const LatentPositions* latent,
                                          Index i0, const IndexSet& train, const IndexSet& columns,
                                          const KernelSpec& kernel, std::size_t resolution = 400) {
  if (!latent) throw UnsupportedModeError("oracle_predict: latent positions are required");
  kernel.validate();
  const OracleSlices slices(f, resolution);
  std::vector<std::vector<double>> train_profiles;
  train_profiles.reserve(train.size());
  for (Index j2 : train) train_profiles.push_back(slices.profile(latent->column(j2)));
  std::vector<double> values(train.size());
  for (Index t = 0; t < train.size(); ++t) values[t] = a(i0, train[t]);

  std::vector<double> out;
  out.reserve(columns.size());
  for (Index j1 : columns) {
    const auto g1 = slices.profile(latent->column(j1));
    std::vector<std::optional<double>> d(train.size());
    for (Index t = 0; t < train.size(); ++t) d[t] = slices.distance(g1, train_profiles[t]);
    out.push_back(predict_entry(values, d, kernel.bandwidth).value);
  }
  return out;
}

}  // namespace clp
