#include "memgov/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "memgov/store.hpp"

namespace memgov {

GravityParams gravity_params_from(const Config& cfg) {
  GravityParams p;
  p.damping = cfg.get("gravity.damping", p.damping);
  p.w_centrality = cfg.get("gravity.w_centrality", p.w_centrality);
  p.w_fragmentation = cfg.get("gravity.w_fragmentation", p.w_fragmentation);
  p.kappa_f = cfg.get("gravity.kappa_f", p.kappa_f);
  p.half_life_cycles = cfg.get("gravity.half_life_cycles", p.half_life_cycles);
  p.protection_quantile = cfg.get("gravity.protection_quantile", p.protection_quantile);
  p.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", p.ticks_per_cycle);
  return p;
}

int fragmentation_if_removed(const std::vector<std::vector<int>>& out_adj, int i) {
  const int n = static_cast<int>(out_adj.size());
  std::vector<int> alive_targets(n, 0);
  std::vector<int> in_degree_of_i_sources;
  int incident = static_cast<int>(out_adj[i].size());
  std::vector<std::vector<int>> in_adj(n);
  for (int j = 0; j < n; ++j) {
    alive_targets[j] = static_cast<int>(out_adj[j].size());
    for (int t : out_adj[j]) {
      in_adj[t].push_back(j);
      if (t == i && j != i) ++incident;
    }
  }
  std::vector<char> removed(n, 0);
  removed[i] = 1;
  std::deque<int> queue;
  for (int j : in_adj[i]) {
    if (j == i) continue;
    if (--alive_targets[j] == 0 && !out_adj[j].empty()) {
      removed[j] = 1;
      queue.push_back(j);
    }
  }
  int orphans = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    ++orphans;
    for (int j : in_adj[v]) {
      if (removed[j]) continue;
      if (--alive_targets[j] == 0 && !out_adj[j].empty()) {
        removed[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return incident + orphans;
}

std::vector<double> centrality(const std::vector<std::vector<int>>& out_adj, double damping,
                               double tol, int max_iter) {
  const int n = static_cast<int>(out_adj.size());
  if (n == 0) return {};
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> x(n, inv_n), next(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (int j = 0; j < n; ++j)
      if (out_adj[j].empty()) dangling += x[j];
    std::fill(next.begin(), next.end(), (1.0 - damping) * inv_n + damping * dangling * inv_n);
    for (int j = 0; j < n; ++j) {
      if (out_adj[j].empty()) continue;
      const double share = damping * x[j] / static_cast<double>(out_adj[j].size());
      for (int t : out_adj[j]) next[t] += share;
    }
    double residual = 0.0;
    for (int j = 0; j < n; ++j) residual += std::abs(next[j] - x[j]);
    x.swap(next);
    if (residual < tol) break;
  }
  return x;
}

double gravity_base(double c, double f, double kappa_c, const GravityParams& p) {
  const double cterm = c <= 0.0 ? 0.0 : c / (c + kappa_c);
  const double fterm = f <= 0.0 ? 0.0 : f / (f + p.kappa_f);
  return p.w_centrality * cterm + p.w_fragmentation * fterm;
}

double decay_factor(double dt_cycles, double half_life_cycles) {
  if (dt_cycles <= 0.0) return 1.0;
  const double lambda = std::log(2.0) / half_life_cycles;
  return std::exp(-lambda * dt_cycles);
}

GravityReport compute_gravity(const IndexState& s, const GravityParams& p, Tick now) {
  GravityReport report;
  std::vector<const WikiEntry*> nodes;
  std::map<EntryId, int> index;
  for (const auto& [id, e] : s.entries) {
    if (e.state == WikiState::archived) continue;
    index[id] = static_cast<int>(nodes.size());
    nodes.push_back(&e);
  }
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return report;
  report.kappa_c = 2.0 / static_cast<double>(n);

  std::vector<std::vector<int>> out_adj(n);
  for (const auto& e : s.edges) {
    if (e.kind != EdgeKind::dependency || e.dangling_to_tombstone) continue;
    auto si = index.find(e.src);
    auto di = index.find(e.dst);
    if (si == index.end() || di == index.end()) continue;
    out_adj[si->second].push_back(di->second);
  }

  const std::vector<double> c = centrality(out_adj, p.damping, p.tol, p.max_iter);

  std::vector<int> frag(n, 0);
  if (n <= 64) {
    std::vector<std::uint64_t> masks(n, 0);
    for (int j = 0; j < n; ++j)
      for (int t : out_adj[j]) masks[j] |= std::uint64_t{1} << t;
    for (int j = 0; j < n; ++j) frag[j] = frag_kernel(masks.data(), n, j);
  } else {
    for (int j = 0; j < n; ++j) frag[j] = fragmentation_if_removed(out_adj, j);
  }

  std::vector<double> bases;
  bases.reserve(n);
  for (int j = 0; j < n; ++j) {
    const WikiEntry* e = nodes[j];
    GravityScore g;
    g.centrality = c[j];
    g.fragmentation = static_cast<double>(frag[j]);
    g.base = gravity_base(g.centrality, g.fragmentation, report.kappa_c, p) *
             e->audit_gravity_factor;
    const double dt = static_cast<double>(now - e->last_accessed) / p.ticks_per_cycle;
    g.eff = g.base * decay_factor(dt, p.half_life_cycles);
    report.scores[e->id] = g;
    bases.push_back(g.base);
  }

  std::sort(bases.begin(), bases.end());
  const int rank = std::max(
      1, static_cast<int>(std::ceil(p.protection_quantile * static_cast<double>(n))));
  report.floor = bases[static_cast<std::size_t>(rank) - 1];
  for (auto& [id, g] : report.scores) g.protected_ = g.base >= report.floor;
  return report;
}

}  // namespace memgov
