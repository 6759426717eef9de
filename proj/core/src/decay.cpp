#include "memgov/decay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "memgov/hash.hpp"
#include "memgov/scorer.hpp"

namespace memgov {

DecayParams decay_params_from(const Config& cfg) {
  DecayParams p;
  p.recency_weight = cfg.get("decay.recency_weight", p.recency_weight);
  p.frequency_weight = cfg.get("decay.frequency_weight", p.frequency_weight);
  p.utility_weight = cfg.get("decay.utility_weight", p.utility_weight);
  p.gravity_weight = cfg.get("decay.gravity_weight", p.gravity_weight);
  p.wear_penalty = cfg.get("decay.wear_penalty", p.wear_penalty);
  p.threshold = cfg.get("decay.threshold", p.threshold);
  p.ewma_alpha = cfg.get("decay.ewma_alpha", p.ewma_alpha);
  p.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", p.ticks_per_cycle);
  p.max_actions = cfg.get("decay.max_actions", p.max_actions);
  p.distortion_step = cfg.get("decay.distortion_step", p.distortion_step);
  p.respect_protection = cfg.get("decay.respect_protection", p.respect_protection);
  return p;
}

double utility_ewma(const std::vector<UtilitySample>& trace, double alpha) {
  if (trace.empty()) return 0.0;
  double m = trace.front().outcome;
  for (std::size_t i = 1; i < trace.size(); ++i)
    m = alpha * trace[i].outcome + (1.0 - alpha) * m;
  return m;
}

double vitality(const WikiEntry& e, double gravity_eff, const DecayParams& p, Tick now) {
  const double days =
      std::max(1.0, static_cast<double>(now - e.last_accessed) / p.ticks_per_cycle);
  return p.recency_weight * (1.0 / days) +
         p.frequency_weight * static_cast<double>(e.access_count) +
         p.utility_weight * utility_ewma(e.utility_trace, p.ewma_alpha) +
         p.gravity_weight * gravity_eff -
         p.wear_penalty * e.summarization_distortion;
}

ClaimList compress_claims(const ClaimList& claims) {
  if (claims.size() <= 1) throw AlreadyMinimal("nothing to shed");
  const std::size_t keep = (claims.size() + 1) / 2;
  std::vector<std::size_t> idx(claims.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&claims](std::size_t a, std::size_t b) {
    return claims[a].strength > claims[b].strength;
  });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  ClaimList out;
  out.reserve(keep);
  for (std::size_t i : idx) out.push_back(claims[i]);
  return out;
}

DecayRun run_decay(const Snapshot& snap, const GravityReport& gravity, const DecayParams& p,
                   Tick now, EventLog& log) {
  const IndexState& s = *snap;
  log.emit(now, ev::decay_start,
           {{"snapshot", snap.commit_id}, {"floor", gravity.floor}});

  DecayRun run;
  std::map<EntryId, WikiEntry> updated;
  for (const auto& [id, e] : s.entries) {
    if (e.state == WikiState::archived) continue;
    WikiEntry copy = e;
    if (auto it = gravity.scores.find(id); it != gravity.scores.end()) {
      copy.gravity_base = it->second.base;
      copy.gravity_eff = it->second.eff;
      copy.gravity_protected = it->second.protected_;
    }
    copy.vitality = vitality(copy, copy.gravity_eff, p, now);
    updated.emplace(id, std::move(copy));
  }

  std::vector<EntryId> order;
  order.reserve(updated.size());
  for (const auto& [id, e] : updated) order.push_back(id);
  std::sort(order.begin(), order.end(), [&updated](const EntryId& a, const EntryId& b) {
    const double va = updated.at(a).vitality, vb = updated.at(b).vitality;
    if (va != vb) return va < vb;
    return a < b;
  });

  int actions = 0;
  for (const EntryId& id : order) {
    WikiEntry& e = updated.at(id);
    const bool eligible =
        e.vitality < p.threshold && (!p.respect_protection || e.gravity_base < gravity.floor);
    std::string action = "none";
    if (eligible && actions < p.max_actions) {
      if (e.claims.size() > 1) {
        archive_entry_content(s, run.changeset, e, log, now);
        const ClaimList next = compress_claims(e.claims);
        const std::string bytes = claims_to_jsonl(next);
        const std::size_t before = e.claims.size();
        e.claims = next;
        e.commit_hash = content_hash(bytes);
        e.summarization_distortion += p.distortion_step;
        run.changeset.blobs.push_back(bytes);
        log.emit(now, ev::compress,
                 {{"entry", id},
                  {"claims_before", static_cast<std::int64_t>(before)},
                  {"claims_after", static_cast<std::int64_t>(next.size())},
                  {"distortion", e.summarization_distortion},
                  {"base", e.gravity_base},
                  {"to", e.commit_hash}});
        ++run.compressed;
        ++actions;
        action = "compress";
      } else if (e.state == WikiState::active) {
        transition(e, LifecycleEvent::decay, log, now);
        ++run.transitioned;
        ++actions;
        action = "decay";
      } else if (e.state == WikiState::decaying) {
        archive_entry_content(s, run.changeset, e, log, now);
        transition(e, LifecycleEvent::archive, log, now);
        run.changeset.tombstones.push_back(id);
        log.emit(now, ev::tombstone, {{"entry", id}, {"cold", e.cold_id}});
        ++run.archived;
        ++actions;
        action = "archive";
      }
    }
    run.report.push_back({id, e.vitality, eligible, action});
  }

  run.changeset.entry_upserts.reserve(updated.size());
  for (auto& [id, e] : updated) run.changeset.entry_upserts.push_back(std::move(e));

  log.emit(now, ev::decay_end,
           {{"compressed", run.compressed},
            {"transitioned", run.transitioned},
            {"archived", run.archived}});
  return run;
}

}  // namespace memgov
