#include "memgov/contextualize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "memgov/hash.hpp"
#include "memgov/model.hpp"
#include "memgov/scorer.hpp"

namespace memgov {

ContextualizeParams contextualize_params_from(const Config& cfg) {
  ContextualizeParams p;
  p.query_window = cfg.get("contextualize.query_window", p.query_window);
  p.redepth_delta = cfg.get("contextualize.redepth_delta", p.redepth_delta);
  return p;
}

int infer_depth(const IndexState& s, const ClaimList& claims,
                const std::deque<QueryRecord>& recent_queries, const ContextualizeParams& p) {
  std::set<std::string> topics;
  for (const auto& c : claims) topics.insert(c.topic);

  std::vector<std::size_t> neighborhood_sizes;
  std::size_t live = 0;
  for (const auto& [id, e] : s.entries) {
    if (e.state == WikiState::archived) continue;
    ++live;
    const bool shares = std::any_of(e.claims.begin(), e.claims.end(), [&topics](const ClaimTuple& c) {
      return topics.count(c.topic) > 0;
    });
    if (shares) neighborhood_sizes.push_back(e.claims.size());
  }
  if (neighborhood_sizes.empty()) return 2;

  const double mean_claims =
      static_cast<double>(std::accumulate(neighborhood_sizes.begin(), neighborhood_sizes.end(),
                                          std::size_t{0})) /
      static_cast<double>(neighborhood_sizes.size());
  std::size_t at_or_below = 0;
  for (const auto& [id, e] : s.entries) {
    if (e.state == WikiState::archived) continue;
    if (static_cast<double>(e.claims.size()) <= mean_claims) ++at_or_below;
  }
  const double prominence = static_cast<double>(at_or_below) / static_cast<double>(live);

  double demand = 0.5;  // no query history yet: assume middling interest
  if (!recent_queries.empty()) {
    std::size_t window = std::min(recent_queries.size(), static_cast<std::size_t>(p.query_window));
    std::size_t hits = 0;
    for (std::size_t i = recent_queries.size() - window; i < recent_queries.size(); ++i) {
      const bool hit = std::any_of(recent_queries[i].claims.begin(),
                                   recent_queries[i].claims.end(), [&topics](const ClaimTuple& c) {
                                     return topics.count(c.topic) > 0;
                                   });
      if (hit) ++hits;
    }
    demand = static_cast<double>(hits) / static_cast<double>(window);
  }

  const long d = std::lround(1.0 + 4.0 * prominence * demand);
  return static_cast<int>(std::clamp(d, 1L, 5L));
}

ClaimList compress_to_depth(const ClaimList& claims, int depth) {
  depth = std::clamp(depth, 1, 5);
  if (claims.empty()) return {};
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(static_cast<double>(claims.size()) * static_cast<double>(depth) / 5.0));
  std::vector<std::size_t> idx(claims.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&claims](std::size_t a, std::size_t b) {
    return claims[a].strength > claims[b].strength;
  });
  idx.resize(std::max<std::size_t>(1, keep));
  std::sort(idx.begin(), idx.end());
  ClaimList out;
  for (std::size_t i : idx) out.push_back(claims[i]);
  return out;
}

namespace {

// Root of the cold lineage chain: the original capture.
const ColdObject* root_cold(const IndexState& s, const std::string& cold_id) {
  const ColdObject* co = s.find_cold(cold_id);
  while (co != nullptr && !co->prior_id.empty()) co = s.find_cold(co->prior_id);
  return co;
}

}  // namespace

ContextualizeRun run_contextualize(const Snapshot& snap, const Store& store,
                                   const std::deque<QueryRecord>& recent_queries,
                                   const std::map<EntryId, AccessDelta>& access,
                                   const ContextualizeParams& p, Tick now, EventLog& log) {
  const IndexState& s = *snap;
  log.emit(now, ev::contextualize_start, {{"snapshot", snap.commit_id}});

  ContextualizeRun run;
  std::map<EntryId, WikiEntry> updated;
  auto touch = [&updated, &s](const EntryId& id) -> WikiEntry& {
    auto it = updated.find(id);
    if (it == updated.end()) it = updated.emplace(id, *s.find_entry(id)).first;
    return it->second;
  };

  for (const auto& [id, delta] : access) {
    const WikiEntry* e = s.find_entry(id);
    if (e == nullptr || e->state == WikiState::archived) continue;
    WikiEntry& copy = touch(id);
    copy.access_count += delta.count;
    copy.last_accessed = std::max(copy.last_accessed, delta.last);
    for (const auto& u : delta.utility) copy.utility_trace.push_back(u);
  }

  for (const auto& [id, e0] : s.entries) {
    if (e0.origin != OriginChannel::external || e0.state == WikiState::archived) continue;
    const auto touched = updated.find(id);
    const WikiEntry& view = touched == updated.end() ? e0 : touched->second;
    ContextualizeAction act{id, view.depth, view.depth, "none"};

    if (view.depth == 0) {
      WikiEntry& e = touch(id);
      const int d = infer_depth(s, e.claims, recent_queries, p);
      // Archive the full capture before any representation replaces it.
      const std::string cid = cold_id_for(e.commit_hash);
      if (s.find_cold(cid) == nullptr) {
        ColdObject co;
        co.id = cid;
        co.blob_hash = e.commit_hash;
        co.origin_locator = "wiki:" + id;
        run.changeset.cold_upserts.push_back(co);
        log.emit(now, ev::cold_store, {{"cold", cid}, {"entry", id}, {"blob", e.commit_hash}});
      }
      e.cold_id = cid;
      const ClaimList rep = compress_to_depth(e.claims, d);
      if (rep != e.claims) {
        const std::string bytes = claims_to_jsonl(rep);
        e.claims = rep;
        e.commit_hash = content_hash(bytes);
        run.changeset.blobs.push_back(bytes);
      }
      e.depth = d;
      log.emit(now, ev::depth_rep, {{"entry", id}, {"depth", d}});
      ++run.fitted;
      act.depth_after = d;
      act.action = "fit";
    } else {
      if (view.cold_id.empty())
        throw MissingColdObject("depth-fitted entry without cold linkout: " + id);
      const ColdObject* root = root_cold(s, view.cold_id);
      if (root == nullptr)
        throw MissingColdObject("cold lineage broken for entry: " + id);
      const auto original_bytes = store.get_blob(root->blob_hash);
      if (!original_bytes)
        throw MissingColdObject("original capture blob missing: " + root->blob_hash);
      const ClaimList original = claims_from_jsonl(*original_bytes);
      const int d = infer_depth(s, original, recent_queries, p);
      if (std::abs(d - view.depth) >= p.redepth_delta) {
        WikiEntry& e = touch(id);
        const ColdObject* prior = s.find_cold(e.cold_id);
        if (prior->state == ColdState::stored) {
          ColdObject recalled = *prior;
          transition(recalled, LifecycleEvent::recall, log, now);
          run.changeset.cold_upserts.push_back(recalled);
        }
        const ClaimList rep = compress_to_depth(original, d);
        const std::string bytes = claims_to_jsonl(rep);
        const std::string rep_hash = content_hash(bytes);
        const std::string cid = cold_id_for(rep_hash);
        if (s.find_cold(cid) == nullptr && cid != e.cold_id) {
          ColdObject co;
          co.id = cid;
          co.blob_hash = rep_hash;
          co.origin_locator = "wiki:" + id;
          co.state = ColdState::recompressed;
          co.prior_id = e.cold_id;
          run.changeset.cold_upserts.push_back(co);
          log.emit(now, ev::cold_store, {{"cold", cid}, {"entry", id}, {"blob", rep_hash}});
          e.cold_id = cid;
        }
        e.claims = rep;
        e.commit_hash = rep_hash;
        e.depth = d;
        run.changeset.blobs.push_back(bytes);
        log.emit(now, ev::depth_rep, {{"entry", id}, {"depth", d}});
        ++run.refitted;
        act.depth_after = d;
        act.action = "refit";
      }
    }
    run.report.push_back(act);
  }

  run.changeset.entry_upserts.reserve(updated.size());
  for (auto& [id, e] : updated) run.changeset.entry_upserts.push_back(std::move(e));

  log.emit(now, ev::contextualize_end, {{"fitted", run.fitted}, {"refitted", run.refitted}});
  return run;
}

}  // namespace memgov
