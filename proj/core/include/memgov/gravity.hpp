#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memgov/config.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct IndexState;

struct GravityParams {
  double damping = 0.85;            // centrality random-jump complement
  double w_centrality = 0.5;
  double w_fragmentation = 0.5;
  double kappa_f = 4.0;             // fragmentation half-saturation (edges)
  double half_life_cycles = 30.0;   // temporal decay of effective gravity
  double protection_quantile = 0.90;
  double ticks_per_cycle = 10.0;
  double tol = 1e-10;
  int max_iter = 500;
};

GravityParams gravity_params_from(const Config& cfg);

// Structural cost of removing node i from a dependency digraph, adjacency
// given as out-edge bitmasks (node count <= 64, no self-edges): every
// dependency edge incident to i, plus the cascade of nodes left with no
// live dependency target. A node with no outgoing edges never orphans.
inline int frag_kernel(const std::uint64_t* out, int n, int i) {
  const std::uint64_t bit_i = std::uint64_t{1} << i;
  int incident = std::popcount(out[i]);
  for (int j = 0; j < n; ++j)
    if (j != i && (out[j] & bit_i)) ++incident;
  std::uint64_t removed = bit_i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int j = 0; j < n; ++j) {
      const std::uint64_t bj = std::uint64_t{1} << j;
      if ((removed & bj) || out[j] == 0) continue;
      if ((out[j] & ~removed) == 0) {
        removed |= bj;
        changed = true;
      }
    }
  }
  return incident + std::popcount(removed) - 1;
}

// Same contract without the 64-node bound; counter-based cascade, O(V+E).
int fragmentation_if_removed(const std::vector<std::vector<int>>& out_adj, int i);

// Damped eigenvector centrality over a digraph; dangling mass is spread
// uniformly. Scores sum to 1 for any non-empty graph.
std::vector<double> centrality(const std::vector<std::vector<int>>& out_adj,
                               double damping = 0.85, double tol = 1e-10, int max_iter = 500);

// Bounded accrual: monotone and strictly sub-linear in both inputs,
// saturating below w_centrality + w_fragmentation (< 1 by construction).
double gravity_base(double c, double f, double kappa_c, const GravityParams& p);

// exp(-lambda * dt), lambda = ln 2 / half-life; exactly 1 at dt = 0 and
// exactly halves every half-life.
double decay_factor(double dt_cycles, double half_life_cycles);

struct GravityScore {
  double centrality = 0.0;
  double fragmentation = 0.0;
  double base = 0.0;  // structural score x any persistent audit reduction
  double eff = 0.0;   // base x temporal decay since last access
  bool protected_ = false;
};

struct GravityReport {
  std::map<EntryId, GravityScore> scores;
  double floor = 0.0;    // protection threshold: nearest-rank quantile of base
  double kappa_c = 0.0;  // centrality half-saturation used (2 / node count)
};

// Scores every non-archived wiki entry over the live dependency subgraph
// (edges flagged dangling are excluded until recomputation re-links them).
GravityReport compute_gravity(const IndexState& s, const GravityParams& p, Tick now);

}  // namespace memgov
