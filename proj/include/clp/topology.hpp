#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "clp/conformal.hpp"
#include "clp/error.hpp"
#include "clp/evalues.hpp"
#include "clp/network.hpp"

namespace clp {

struct SymmetricInputs {
  WeightedNetwork network;
  MissingMask mask;
};

// A'_{i,j} = A_{min,max}, M'_{i,j} = M_{min,max}: only the strict upper
// triangle of the inputs is read.
inline SymmetricInputs extend_symmetric(const WeightedNetwork& a_upper, const MissingMask& m_upper) {
  require_same_shape(a_upper, m_upper);
  if (a_upper.n_rows() != a_upper.n_cols() || a_upper.diagonal_defined())
    throw ValidationError("undirected mode: network must be square without self-loops");
  const Index n = a_upper.n_rows();
  DenseMatrix<double> w(n, n, 0.0);
  DenseMatrix<std::uint8_t> m(n, n, 0);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      w(i, j) = w(j, i) = a_upper(i, j);
      m(i, j) = m(j, i) = m_upper.missing(i, j) ? 1 : 0;
    }
  return {WeightedNetwork::square(std::move(w)), MissingMask(std::move(m), false)};
}

// Full-matrix input in undirected mode: must already be symmetric in both
// weights (on observed cells) and missingness.
inline void require_symmetric(const WeightedNetwork& a, const MissingMask& m) {
  require_same_shape(a, m);
  if (a.n_rows() != a.n_cols()) throw ValidationError("undirected mode: network must be square");
  for (Index i = 0; i < a.n_rows(); ++i)
    for (Index j = i + 1; j < a.n_cols(); ++j) {
      if (m.missing(i, j) != m.missing(j, i))
        throw ValidationError("undirected mode: mask is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      if (m.observed(i, j) && a(i, j) != a(j, i))
        throw ValidationError("undirected mode: network is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    }
}

// Estimation runs on the symmetric extension (both orientations inform the
// predictions); each dyad is tested once, as (i, j) with i < j, and e-BH uses
// the number of upper-triangle test dyads.
inline ClpResult undirected_clp(const WeightedNetwork& a_upper, const MissingMask& m_upper,
                                const HypothesisThresholds& thresholds, ClpParams params, std::uint64_t seed) {
  const auto ext = extend_symmetric(a_upper, m_upper);
  params.topology = TopologyMode::undirected;
  return clp_global(ext.network, ext.mask, thresholds, params, seed);
}

inline ClpResult bipartite_clp(const WeightedNetwork& a, const MissingMask& mask,
                               const HypothesisThresholds& thresholds, ClpParams params, std::uint64_t seed) {
  params.topology = TopologyMode::bipartite;
  return clp_global(a, mask, thresholds, params, seed);
}

// Local test whose Omega candidates are every row except i0.
inline LocalTestResult bipartite_local_test(const WeightedNetwork& a, const MissingMask& mask, const RowSplit& split,
                                            const CalibAllocation& alloc, std::span<const double> thresholds,
                                            const KernelSpec& kernel, double alpha_bh, Rng& rng,
                                            std::size_t block_id = 0, LocalDiagnostics* diag = nullptr) {
  return local_test(a, mask, split, alloc, thresholds, kernel, alpha_bh, rng, OmegaCandidates::all_other_rows,
                    block_id, diag);
}

}  // namespace clp
