#include "memgov/consolidate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "memgov/decay.hpp"
#include "memgov/hash.hpp"
#include "memgov/model.hpp"

namespace memgov {

ConsolidateParams consolidate_params_from(const Config& cfg) {
  ConsolidateParams p;
  p.support_threshold = cfg.get("consolidate.support_threshold", p.support_threshold);
  p.contradiction_threshold =
      cfg.get("consolidate.contradiction_threshold", p.contradiction_threshold);
  p.cohesion_w_similarity = cfg.get("consolidate.cohesion_w_similarity", p.cohesion_w_similarity);
  p.cohesion_w_task = cfg.get("consolidate.cohesion_w_task", p.cohesion_w_task);
  p.cohesion_w_contradiction =
      cfg.get("consolidate.cohesion_w_contradiction", p.cohesion_w_contradiction);
  p.min_cluster_size = cfg.get("consolidate.min_cluster_size", p.min_cluster_size);
  p.friction = cfg.get("consolidate.friction", p.friction);
  p.safety_friction = cfg.get("consolidate.safety_friction", p.safety_friction);
  p.diversity_bonus = cfg.get("consolidate.diversity_bonus", p.diversity_bonus);
  p.buffer_ttl_cycles = cfg.get("consolidate.buffer_ttl_cycles", p.buffer_ttl_cycles);
  p.integrate_edge_threshold =
      cfg.get("consolidate.integrate_edge_threshold", p.integrate_edge_threshold);
  p.negative_utility_cycles =
      cfg.get("consolidate.negative_utility_cycles", p.negative_utility_cycles);
  p.promotion_enabled = cfg.get("consolidate.promotion_enabled", p.promotion_enabled);
  p.model_version = cfg.get("consolidate.model_version", p.model_version);
  return p;
}

double trapezoid(double x, double a, double b, double c, double d) {
  if (x < a || x > d) return 0.0;
  if (x < b) return (x - a) / (b - a);
  if (x <= c) return 1.0;
  if (d == c) return 1.0;
  return (d - x) / (d - c);
}

CohesionBucket bucket_for(double cohesion) {
  const double lo = trapezoid(cohesion, 0.0, 0.0, 0.30, 0.45);
  const double mi = trapezoid(cohesion, 0.30, 0.45, 0.60, 0.75);
  const double hi = trapezoid(cohesion, 0.60, 0.75, 1.0, 1.0);
  if (lo >= mi && lo >= hi) return CohesionBucket::low;
  if (mi >= hi) return CohesionBucket::mid;
  return CohesionBucket::high;
}

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double cohesion_with_weights(const Scorer& scorer, const ClaimList& claims, const IndexState& s,
                             const ConsolidateParams& p, double w_contradiction) {
  double best_sim = -1.0;
  double penalty = 0.0;
  for (const auto& [id, w] : s.entries) {
    if (w.state != WikiState::active) continue;
    best_sim = std::max(best_sim, scorer.similarity(claims, w.claims));
    const double ct = scorer.contradiction(claims, w.claims);
    if (ct >= p.contradiction_threshold) penalty += ct * w.gravity_eff;
  }
  if (best_sim < 0.0) best_sim = 1.0;  // nothing to cohere against yet
  return clamp01(p.cohesion_w_similarity * best_sim +
                 p.cohesion_w_task * scorer.task_alignment(claims) -
                 w_contradiction * penalty);
}

}  // namespace

double cohesion_score(const Scorer& scorer, const ClaimList& claims, const IndexState& s,
                      const ConsolidateParams& p) {
  return cohesion_with_weights(scorer, claims, s, p, p.cohesion_w_contradiction);
}

ClaimList merge_claims(const std::vector<const ClaimList*>& members) {
  std::map<std::pair<std::string, int>, ClaimTuple> best;
  for (const ClaimList* list : members) {
    for (const auto& c : *list) {
      auto key = std::make_pair(c.topic, c.polarity);
      auto it = best.find(key);
      if (it == best.end() || c.strength > it->second.strength) best[key] = c;
    }
  }
  ClaimList out;
  out.reserve(best.size());
  for (auto& [k, c] : best) out.push_back(std::move(c));
  return canonical_claims(std::move(out));
}

std::string ConsolidateRun::report_jsonl() const {
  std::vector<const RoutingDecision*> sorted;
  sorted.reserve(report.size());
  for (const auto& d : report) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(), [](const RoutingDecision* a, const RoutingDecision* b) {
    if (a->entry != b->entry) return a->entry < b->entry;
    return a->action < b->action;
  });
  std::string out;
  for (const RoutingDecision* d : sorted) {
    nlohmann::json j = {{"entry", d->entry},
                        {"cohesion", d->cohesion},
                        {"bucket", to_string(d->bucket)},
                        {"action", d->action}};
    if (!d->branch.empty()) j["branch"] = d->branch;
    if (!d->resolution.empty()) j["resolution"] = d->resolution;
    if (d->pressure >= 0.0) j["pressure"] = d->pressure;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

struct Workitem {
  BufferEntry row;  // copy with cycles_in_buffer already advanced
  double cohesion = 0.0;
  CohesionBucket bucket = CohesionBucket::low;
  std::map<EntryId, double> contradicted;  // active wiki id -> strength
  bool divergent = false;
  bool consumed = false;
};

OriginChannel dominant_channel(const std::vector<const BufferEntry*>& members) {
  int counts[3] = {0, 0, 0};
  for (const BufferEntry* m : members) counts[static_cast<int>(m->origin)]++;
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<OriginChannel>(best);
}

}  // namespace

ConsolidateRun run_consolidate(const Snapshot& snap, const Scorer& scorer,
                               const ConsolidateParams& p, Tick now, EventLog& log) {
  const IndexState& s = *snap;
  log.emit(now, ev::consolidate_start, {{"snapshot", snap.commit_id}, {"model", p.model_version}});

  ConsolidateRun run;
  std::map<EntryId, BufferEntry> buffer_out;  // rows to persist
  std::map<EntryId, WikiEntry> entry_work;    // wiki rows touched this run
  std::map<BranchRef, MinorityBranch> branch_work;
  std::set<BranchRef> branch_touched;

  for (const auto& [ref, br] : s.branches)
    if (br.state == BranchState::open) branch_work.emplace(ref, br);

  std::set<EntryId> open_members;
  for (const auto& [ref, br] : branch_work)
    for (const auto& m : br.member_ids) open_members.insert(m);

  auto wiki = [&entry_work, &s](const EntryId& id) -> WikiEntry& {
    auto it = entry_work.find(id);
    if (it == entry_work.end()) it = entry_work.emplace(id, *s.find_entry(id)).first;
    return it->second;
  };

  // Buffer sweep: advance pending rows one cycle; expire strays past TTL.
  // Rows held inside an open branch never expire out from under it.
  std::map<EntryId, Workitem> work;
  for (const auto& [id, b] : s.buffer) {
    if (b.state != BufferState::pending) continue;
    BufferEntry row = b;
    row.cycles_in_buffer += 1;
    if (row.cycles_in_buffer > p.buffer_ttl_cycles && open_members.count(id) == 0) {
      transition(row, LifecycleEvent::expire, log, now);
      buffer_out[id] = std::move(row);
      run.report.push_back({id, 0.0, CohesionBucket::low, "expired", "", "", -1.0});
      ++run.expired;
      continue;
    }
    Workitem item;
    item.row = std::move(row);
    work.emplace(id, std::move(item));
  }

  // Phase 1: pairwise structural pass over the workset.
  log.emit(now, ev::phase1_start,
           {{"workset", static_cast<std::int64_t>(work.size())}});
  std::map<EntryId, std::map<EntryId, double>> support;
  for (auto ia = work.begin(); ia != work.end(); ++ia) {
    for (auto ib = std::next(ia); ib != work.end(); ++ib) {
      const double sim = scorer.similarity(ia->second.row.claims, ib->second.row.claims);
      if (sim >= p.support_threshold) {
        support[ia->first][ib->first] = sim;
        support[ib->first][ia->first] = sim;
      }
    }
  }

  // Phase 2: coherence against the active wiki.
  log.emit(now, ev::phase2_start, {});
  std::set<std::string> active_vocab;
  bool any_active = false;
  for (const auto& [id, w] : s.entries) {
    if (w.state != WikiState::active) continue;
    any_active = true;
    for (const auto& c : w.claims) active_vocab.insert(c.topic);
  }
  log.emit(now, ev::wiki_read, {{"scope", "phase2"}});

  for (auto& [id, item] : work) {
    item.cohesion = cohesion_score(scorer, item.row.claims, s, p);
    item.bucket = bucket_for(item.cohesion);
    for (const auto& [wid, w] : s.entries) {
      if (w.state != WikiState::active) continue;
      const double ct = scorer.contradiction(item.row.claims, w.claims);
      if (ct >= p.contradiction_threshold) item.contradicted[wid] = ct;
    }
    if (any_active) {
      item.divergent = std::none_of(item.row.claims.begin(), item.row.claims.end(),
                                    [&active_vocab](const ClaimTuple& c) {
                                      return active_vocab.count(c.topic) > 0;
                                    });
    }
    item.row.divergence_marker = item.divergent;
    log.emit(now, ev::classify,
             {{"entry", id}, {"cohesion", item.cohesion}, {"bucket", to_string(item.bucket)}});
  }

  auto persist_edge = [&run, &log, now](Edge e) {
    e.weight = clamp01(e.weight);
    run.changeset.edge_upserts.push_back(e);
    log.emit(now, ev::edge_write,
             {{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}, {"weight", e.weight}});
  };

  std::map<EntryId, EntryId> integrated_as;  // buffer id -> wiki id
  auto integrate = [&](Workitem& item, const std::string& action) {
    const ClaimList claims = canonical_claims(item.row.claims);
    const std::string bytes = claims_to_jsonl(claims);
    const EntryId wid = content_hash(bytes);
    if (s.find_entry(wid) == nullptr && entry_work.find(wid) == entry_work.end()) {
      WikiEntry w;
      w.id = wid;
      w.commit_hash = wid;
      w.claims = claims;
      w.last_accessed = now;
      w.cohesion_bucket = item.bucket == CohesionBucket::mid ? CohesionBucket::mid
                                                             : CohesionBucket::high;
      w.origin = item.row.origin;
      w.divergence_marker = item.divergent;
      w.audit_priority = scorer.safety_flagged(claims);
      entry_work.emplace(wid, std::move(w));
      run.changeset.blobs.push_back(bytes);
      log.emit(now, ev::wiki_write, {{"entry", wid}, {"source", item.row.id}});

      EntryId nearest;
      double best = -1.0;
      for (const auto& [xid, x] : s.entries) {
        if (x.state != WikiState::active) continue;
        const double sim = scorer.similarity(claims, x.claims);
        if (sim > best || (sim == best && xid < nearest)) {
          best = sim;
          nearest = xid;
        }
      }
      if (best >= p.integrate_edge_threshold)
        persist_edge({wid, nearest, EdgeKind::dependency, best, false});
      for (const auto& [cid, ct] : item.contradicted)
        persist_edge({wid, cid, EdgeKind::contradiction, ct, false});
      for (const auto& [dst, kind] : item.row.candidate_edges) {
        auto it = integrated_as.find(dst);
        const EntryId target = it != integrated_as.end() ? it->second
                               : s.find_entry(dst) != nullptr ? dst
                                                              : EntryId{};
        if (target.empty() || target == wid) continue;
        const ClaimList& target_claims = it != integrated_as.end()
                                             ? entry_work.at(it->second).claims
                                             : s.find_entry(dst)->claims;
        const double sim = scorer.similarity(claims, target_claims);
        if (sim >= p.support_threshold) persist_edge({wid, target, kind, sim, false});
      }
    }
    integrated_as[item.row.id] = wid;
    transition(item.row, LifecycleEvent::consolidate, log, now);
    buffer_out[item.row.id] = item.row;
    run.integrated.push_back(wid);
    std::string resolution;
    if (item.divergent) resolution = "integrate-new-vocabulary";
    run.report.push_back({item.row.id, item.cohesion, item.bucket, action, "", resolution, -1.0});
    item.consumed = true;
  };

  // Minority-branch routing shared by contradicting clusters and lone
  // low-cohesion contradictors.
  auto branch_route = [&](const std::vector<EntryId>& member_ids, const EntryId& incumbent_id) {
    std::vector<EntryId> members = member_ids;

    // Fold into the open branch against this incumbent, if one exists.
    BranchRef ref;
    for (const auto& [r, br] : branch_work)
      if (br.state == BranchState::open && br.incumbent_id == incumbent_id) ref = r;
    const bool fresh = ref.empty();
    if (fresh) {
      std::string base = "br-" + incumbent_id.substr(0, 8);
      ref = base;
      for (int i = 2; s.branches.count(ref) > 0 || branch_work.count(ref) > 0; ++i)
        ref = base + "-" + std::to_string(i);
      MinorityBranch br;
      br.branch_ref = ref;
      br.incumbent_id = incumbent_id;
      br.base_commit = snap.commit_id;
      branch_work.emplace(ref, br);
      log.emit(now, ev::branch_create, {{"branch", ref}, {"incumbent", incumbent_id}});
    }
    MinorityBranch& br = branch_work.at(ref);
    branch_touched.insert(ref);
    std::set<EntryId> merged(br.member_ids.begin(), br.member_ids.end());
    for (const auto& m : members) merged.insert(m);
    br.member_ids.assign(merged.begin(), merged.end());
    br.contradiction_edge_count = static_cast<int>(br.member_ids.size());
    if (!fresh)
      log.emit(now, ev::branch_extend,
               {{"branch", ref},
                {"members", static_cast<std::int64_t>(br.member_ids.size())}});

    // Pressure accrues over every member still pending in the workset.
    std::vector<const BufferEntry*> live;
    for (const auto& m : br.member_ids)
      if (auto it = work.find(m); it != work.end()) live.push_back(&it->second.row);

    const WikiEntry* incumbent = s.find_entry(incumbent_id);
    double support_sum = 0.0;
    int support_pairs = 0;
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        auto si = support.find(live[i]->id);
        if (si == support.end()) continue;
        auto sj = si->second.find(live[j]->id);
        if (sj == si->second.end()) continue;
        support_sum += sj->second;
        ++support_pairs;
      }
    const double mean_support = support_pairs == 0 ? 1.0 : support_sum / support_pairs;
    std::set<OriginChannel> channels;
    double pressure = 0.0;
    bool safety = false;
    for (const BufferEntry* m : live) {
      pressure += mean_support * scorer.contradiction(m->claims, incumbent->claims);
      channels.insert(m->origin);
      if (scorer.safety_flagged(m->claims)) safety = true;
    }
    pressure *= 1.0 + p.diversity_bonus * static_cast<double>(channels.size()) / 3.0;
    const double friction = safety ? p.safety_friction : p.friction;
    const double resistance = friction * incumbent->gravity_eff;

    if (p.promotion_enabled && pressure > 0.0 && pressure >= resistance) {
      std::vector<const ClaimList*> member_claims;
      for (const BufferEntry* m : live) member_claims.push_back(&m->claims);
      const ClaimList merged_claims = merge_claims(member_claims);
      const std::string bytes = claims_to_jsonl(merged_claims);
      const EntryId yid = content_hash(bytes);
      double contr_sum = 0.0;
      for (const BufferEntry* m : live)
        contr_sum += scorer.contradiction(m->claims, incumbent->claims);

      WikiEntry y;
      y.id = yid;
      y.commit_hash = yid;
      y.claims = merged_claims;
      y.last_accessed = now;
      y.origin = dominant_channel(live);
      entry_work.emplace(yid, std::move(y));
      run.changeset.blobs.push_back(bytes);
      log.emit(now, ev::wiki_write, {{"entry", yid}, {"branch", ref}});
      persist_edge({yid, incumbent_id, EdgeKind::contradiction,
                    live.empty() ? 0.0 : contr_sum / static_cast<double>(live.size()), false});

      transition(wiki(incumbent_id), LifecycleEvent::decay, log, now);

      for (const EntryId& m : br.member_ids) {
        if (auto it = work.find(m); it != work.end()) {
          transition(it->second.row, LifecycleEvent::consolidate, log, now);
          buffer_out[m] = it->second.row;
          it->second.consumed = true;
          run.report.push_back({m, it->second.cohesion, it->second.bucket, "promote-member", ref,
                                "", pressure});
        }
      }
      br.member_count_history.push_back(static_cast<int>(br.member_ids.size()));
      transition(br, LifecycleEvent::promote, log, now);
      log.emit(now, ev::branch_promote, {{"branch", ref}, {"incumbent", incumbent_id}, {"entry", yid}});
      run.promoted.push_back(ref);
      run.integrated.push_back(yid);
    } else {
      for (const EntryId& m : members) {
        auto it = work.find(m);
        if (it == work.end()) continue;
        it->second.consumed = true;
        buffer_out[m] = it->second.row;  // persists the advanced cycle count
        run.report.push_back({m, it->second.cohesion, it->second.bucket,
                              fresh ? "branch-create" : "branch-extend", ref, "", pressure});
      }
    }
  };

  // Clusters: support components whose members all sit below the high
  // bucket and share at least one contradicted incumbent.
  std::set<EntryId> visited;
  for (const auto& [seed, item] : work) {
    if (visited.count(seed)) continue;
    std::vector<EntryId> component;
    std::deque<EntryId> frontier{seed};
    visited.insert(seed);
    while (!frontier.empty()) {
      EntryId cur = frontier.front();
      frontier.pop_front();
      component.push_back(cur);
      if (auto it = support.find(cur); it != support.end())
        for (const auto& [nb, wgt] : it->second)
          if (visited.insert(nb).second) frontier.push_back(nb);
    }
    if (static_cast<int>(component.size()) < p.min_cluster_size) continue;
    std::sort(component.begin(), component.end());
    const bool all_below_high =
        std::all_of(component.begin(), component.end(), [&work](const EntryId& m) {
          return work.at(m).bucket != CohesionBucket::high;
        });
    if (!all_below_high) continue;

    std::map<EntryId, int> incumbent_votes;
    for (const auto& m : component)
      for (const auto& [wid, ct] : work.at(m).contradicted) incumbent_votes[wid] += 1;
    EntryId common;
    double best_g = -1.0;
    for (const auto& [wid, votes] : incumbent_votes) {
      if (votes != static_cast<int>(component.size())) continue;
      const double g = s.find_entry(wid)->gravity_eff;
      if (g > best_g || (g == best_g && (common.empty() || wid < common))) {
        best_g = g;
        common = wid;
      }
    }
    if (common.empty()) continue;
    branch_route(component, common);
  }

  // Individual routing for whatever the cluster pass left standing.
  for (auto& [id, item] : work) {
    if (item.consumed) continue;
    switch (item.bucket) {
      case CohesionBucket::high:
        integrate(item, "integrate");
        break;
      case CohesionBucket::mid:
        integrate(item, "integrate-flagged");
        break;
      case CohesionBucket::low:
        if (!item.contradicted.empty()) {
          EntryId incumbent;
          double best_g = -1.0;
          for (const auto& [wid, ct] : item.contradicted) {
            const double g = s.find_entry(wid)->gravity_eff;
            if (g > best_g || (g == best_g && (incumbent.empty() || wid < incumbent))) {
              best_g = g;
              incumbent = wid;
            }
          }
          branch_route({id}, incumbent);
        } else {
          item.consumed = true;
          buffer_out[id] = item.row;
          ++run.held;
          run.report.push_back({id, item.cohesion, item.bucket, "held", "",
                                item.divergent ? "keep-ontology" : "", -1.0});
        }
        break;
    }
  }

  // Flagged-integration follow-up: entries admitted with reservations that
  // keep accumulating negative utility get rescored at reduced
  // contradiction weight; acceptance clears the flag, failure quarantines.
  for (const auto& [id, e] : s.entries) {
    if (e.state != WikiState::active) continue;
    WikiEntry probe = entry_work.count(id) ? entry_work.at(id) : e;
    if (probe.state != WikiState::active) continue;
    const double ewma = utility_ewma(probe.utility_trace, 0.3);
    const int neg = ewma < 0.0 ? probe.negative_utility_cycles + 1 : 0;
    if (neg != probe.negative_utility_cycles) wiki(id).negative_utility_cycles = neg;
    if (probe.cohesion_bucket == CohesionBucket::mid && probe.divergence_marker &&
        neg >= p.negative_utility_cycles && !probe.quarantined) {
      const double rescored = cohesion_with_weights(scorer, probe.claims, s, p,
                                                    p.cohesion_w_contradiction / p.friction);
      const CohesionBucket b = bucket_for(rescored);
      WikiEntry& w = wiki(id);
      std::string action = "rescore-keep";
      if (b == CohesionBucket::high) {
        w.cohesion_bucket = CohesionBucket::high;
        action = "rescore-accept";
      } else if (b == CohesionBucket::low) {
        w.quarantined = true;
        action = "quarantine";
      }
      log.emit(now, ev::classify, {{"entry", id}, {"cohesion", rescored}, {"bucket", to_string(b)}});
      run.report.push_back({id, rescored, b, action, "", "", -1.0});
    }
  }

  // Scoring-model stamp: on mismatch, everything under floor protection is
  // flagged for review before the new model governs it.
  if (p.model_version != s.model_version) {
    for (const auto& [id, e] : s.entries) {
      if (e.state == WikiState::archived || !e.gravity_protected) continue;
      wiki(id).review_flagged = true;
      run.report.push_back({id, e.gravity_base, CohesionBucket::high, "review-flag", "", "", -1.0});
    }
    run.changeset.model_version = p.model_version;
  }

  // Open branches age one cycle and record their member count.
  for (auto& [ref, br] : branch_work) {
    if (br.state == BranchState::open) {
      br.cycles_open += 1;
      br.member_count_history.push_back(static_cast<int>(br.member_ids.size()));
      run.changeset.branch_upserts.push_back(br);
    } else if (branch_touched.count(ref)) {
      run.changeset.branch_upserts.push_back(br);
    }
  }

  for (auto& [id, b] : buffer_out) run.changeset.buffer_upserts.push_back(std::move(b));
  for (auto& [id, e] : entry_work) run.changeset.entry_upserts.push_back(std::move(e));

  log.emit(now, ev::consolidate_end,
           {{"integrated", static_cast<std::int64_t>(run.integrated.size())},
            {"promoted", static_cast<std::int64_t>(run.promoted.size())},
            {"expired", run.expired},
            {"held", run.held}});
  return run;
}

}  // namespace memgov
