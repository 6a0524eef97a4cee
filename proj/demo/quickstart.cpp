// Simulate a weighted network with missing links, test H: A_ij <= c_ij on
// every missing link, and score the rejections against the hidden truth.

#include <cstdio>

#include "clp/clp.hpp"

int main() {
  clp::GraphonSpec graphon;  // f(u, v) = u^3 + 2 v^3, noise U[-0.1, 0.1]
  const auto net = clp::generate_graphon_network(graphon, 100, 11);
  const auto mask = clp::generate_mask(clp::heterogeneous(0.0, 0.4), 100, 100, false, 12);

  // 30% of the missing links are alternatives: c = A - 1.5 there, c = A elsewhere.
  auto rng = clp::SeedTree(13).rng();
  const auto thresholds = clp::build_thresholds(net.network, mask, clp::ThresholdRule::signal(0.3, 1.5), rng);

  clp::ClpParams params;
  params.alpha_ebh = 0.2;
  params.alpha_bh = 0.1;
  params.m_reps = 5;
  const auto result = clp::clp_global(net.network, mask, thresholds, params, 14);

  const auto s = clp::score(result.rejection.rejected, thresholds);
  std::printf("tested %zu missing links (%zu alternatives)\n", thresholds.size(), thresholds.alternatives());
  std::printf("rejected %zu: FDP %.3f, power %.3f\n", s.rejected, s.fdp, s.power);
  return 0;
}
