#include "memgov/audit.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "memgov/decay.hpp"
#include "memgov/model.hpp"

namespace memgov {

AuditParams audit_params_from(const Config& cfg) {
  AuditParams p;
  p.top_n = cfg.get("audit.top_n", p.top_n);
  p.query_sample = cfg.get("audit.query_sample", p.query_sample);
  p.degrade_delta = cfg.get("audit.degrade_delta", p.degrade_delta);
  p.gravity_reduction = cfg.get("audit.gravity_reduction", p.gravity_reduction);
  p.branch_stale_cycles = cfg.get("audit.branch_stale_cycles", p.branch_stale_cycles);
  p.cadence_cycles = cfg.get("audit.cadence_cycles", p.cadence_cycles);
  return p;
}

SuspensionOutcome suspension_test(const IndexState& s, const Scorer& scorer,
                                  const EntryId& target,
                                  const std::deque<QueryRecord>& queries, const AuditParams& p) {
  std::vector<std::pair<EntryId, ClaimList>> with, without;
  for (const auto& [id, e] : s.entries) {
    if (e.state == WikiState::archived) continue;
    with.emplace_back(id, e.claims);
    if (id != target) without.emplace_back(id, e.claims);
  }

  std::vector<const QueryRecord*> replay;
  for (auto it = queries.rbegin(); it != queries.rend(); ++it) {
    if (std::find(it->accessed.begin(), it->accessed.end(), target) == it->accessed.end())
      continue;
    replay.push_back(&*it);
    if (static_cast<int>(replay.size()) >= p.query_sample) break;
  }

  SuspensionOutcome out;
  if (replay.empty()) {
    out.untested = true;
    return out;
  }

  auto best = [&scorer](const ClaimList& q,
                        const std::vector<std::pair<EntryId, ClaimList>>& corpus) {
    double b = 0.0;
    for (const auto& [id, claims] : corpus)
      b = std::max(b, query_score(scorer, q, id, corpus));
    return b;
  };

  double sum = 0.0;
  for (const QueryRecord* q : replay) sum += best(q->claims, with) - best(q->claims, without);
  out.delta = sum / static_cast<double>(replay.size());
  out.queries_replayed = static_cast<int>(replay.size());
  if (out.delta > p.degrade_delta)
    out.result = SuspensionResult::degraded;
  else if (out.delta < -p.degrade_delta)
    out.result = SuspensionResult::improved;
  else
    out.result = SuspensionResult::unchanged;
  return out;
}

std::string AuditRun::report_jsonl() const {
  std::vector<const AuditReportLine*> sorted;
  for (const auto& l : report) sorted.push_back(&l);
  std::sort(sorted.begin(), sorted.end(),
            [](const AuditReportLine* a, const AuditReportLine* b) { return a->entry < b->entry; });
  std::string out;
  for (const AuditReportLine* l : sorted) {
    const nlohmann::json j = {{"entry", l->entry},
                              {"delta", l->delta},
                              {"verdict", to_string(l->verdict)},
                              {"outcome", to_string(l->outcome)},
                              {"untested", l->untested}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

AuditRun run_audit(const Snapshot& snap, const Scorer& scorer,
                   const std::deque<QueryRecord>& queries, const AuditParams& p, Tick now,
                   EventLog& log) {
  const IndexState& s = *snap;
  log.emit(now, ev::audit_start, {{"snapshot", snap.commit_id}});

  AuditRun run;
  std::map<EntryId, WikiEntry> entry_work;
  auto wiki = [&entry_work, &s](const EntryId& id) -> WikiEntry& {
    auto it = entry_work.find(id);
    if (it == entry_work.end()) it = entry_work.emplace(id, *s.find_entry(id)).first;
    return it->second;
  };

  std::vector<const WikiEntry*> candidates;
  for (const auto& [id, e] : s.entries)
    if (e.state == WikiState::active) candidates.push_back(&e);
  std::sort(candidates.begin(), candidates.end(), [](const WikiEntry* a, const WikiEntry* b) {
    if (a->audit_priority != b->audit_priority) return a->audit_priority;
    if (a->gravity_base != b->gravity_base) return a->gravity_base > b->gravity_base;
    if (a->last_accessed != b->last_accessed) return a->last_accessed < b->last_accessed;
    return a->id < b->id;
  });
  if (static_cast<int>(candidates.size()) > p.top_n) candidates.resize(p.top_n);

  std::int64_t next_id = 1;
  for (const auto& r : s.audit_log) next_id = std::max(next_id, r.id + 1);

  std::vector<AuditRecord> new_records;
  for (const WikiEntry* target : candidates) {
    const SuspensionOutcome out = suspension_test(s, scorer, target->id, queries, p);
    log.emit(now, ev::suspend_test,
             {{"entry", target->id},
              {"delta", out.delta},
              {"verdict", to_string(out.result)},
              {"untested", out.untested}});

    AuditRecord rec;
    rec.id = next_id++;
    rec.entry_id = target->id;
    rec.ts = now;
    rec.suspension_result = out.result;
    rec.untested = out.untested;
    rec.delta = out.delta;
    switch (out.result) {
      case SuspensionResult::degraded: rec.outcome = AuditOutcome::restored; break;
      case SuspensionResult::unchanged: rec.outcome = AuditOutcome::gravity_reduced; break;
      case SuspensionResult::improved: rec.outcome = AuditOutcome::archived; break;
    }

    // The record lands in the log strictly before any state it justifies.
    log.emit(now, ev::audit_record,
             {{"record", rec.id},
              {"entry", target->id},
              {"verdict", to_string(rec.suspension_result)},
              {"outcome", to_string(rec.outcome)}});
    run.changeset.audit_appends.push_back(rec);
    new_records.push_back(rec);

    WikiEntry& e = wiki(target->id);
    e.audit_priority = false;
    switch (rec.outcome) {
      case AuditOutcome::restored:
        e.last_accessed = now;  // re-reinforced: effective gravity resets
        break;
      case AuditOutcome::gravity_reduced:
        e.audit_gravity_factor *= p.gravity_reduction;
        break;
      case AuditOutcome::archived:
        archive_entry_content(s, run.changeset, e, log, now);
        transition(e, LifecycleEvent::archive, log, now);
        run.changeset.tombstones.push_back(e.id);
        log.emit(now, ev::tombstone, {{"entry", e.id}, {"cold", e.cold_id}});
        break;
    }
    run.report.push_back({target->id, out.delta, out.result, rec.outcome, out.untested});
  }

  // A run of passes without ever being missed, on top of negative utility,
  // moves an entry to the front of the next review.
  auto latest_streak = [&s, &new_records](const EntryId& id) {
    int streak = 0;
    auto consider = [&streak, &id](const AuditRecord& r) {
      if (r.entry_id != id) return;
      if (r.suspension_result == SuspensionResult::degraded)
        streak = 0;
      else
        ++streak;
    };
    for (const auto& r : s.audit_log) consider(r);
    for (const auto& r : new_records) consider(r);
    return streak;
  };
  for (const auto& [id, e0] : s.entries) {
    if (e0.state != WikiState::active) continue;
    const WikiEntry& cur = entry_work.count(id) ? entry_work.at(id) : e0;
    if (cur.state != WikiState::active || cur.audit_priority) continue;
    if (latest_streak(id) >= 2 && utility_ewma(cur.utility_trace, 0.3) < 0.0)
      wiki(id).audit_priority = true;
  }

  // Branch review: a challenge that stopped growing while its incumbent
  // keeps proving out is closed, never silently.
  auto latest_verdict = [&s, &new_records](const EntryId& id) {
    const AuditRecord* latest = nullptr;
    for (const auto& r : s.audit_log)
      if (r.entry_id == id) latest = &r;
    for (const auto& r : new_records)
      if (r.entry_id == id) latest = &r;
    return latest;
  };
  for (const auto& [ref, br] : s.branches) {
    if (br.state != BranchState::open) continue;
    const AuditRecord* verdict = latest_verdict(br.incumbent_id);
    if (verdict == nullptr || verdict->suspension_result != SuspensionResult::degraded) continue;
    const auto& hist = br.member_count_history;
    if (static_cast<int>(hist.size()) < p.branch_stale_cycles) continue;
    bool stale = true;
    for (int i = 1; i < p.branch_stale_cycles; ++i)
      if (hist[hist.size() - 1 - i] != hist.back()) stale = false;
    if (!stale) continue;

    MinorityBranch closed = br;
    closed.close_reason = "stale-challenge-incumbent-degrades-without";
    log.emit(now, ev::branch_close, {{"branch", ref}, {"reason", closed.close_reason}});
    transition(closed, LifecycleEvent::close, log, now);
    run.changeset.branch_upserts.push_back(closed);
    run.closed_branches.push_back(ref);
    for (const auto& m : closed.member_ids) {
      const BufferEntry* b = s.find_buffer(m);
      if (b == nullptr || b->state != BufferState::pending) continue;
      BufferEntry copy = *b;
      copy.reject_reason = "branch " + ref + " closed: " + closed.close_reason;
      transition(copy, LifecycleEvent::reject, log, now);
      run.changeset.buffer_upserts.push_back(copy);
    }
  }

  std::map<std::string, std::int64_t> topic_counts;
  std::size_t span = std::min(queries.size(), static_cast<std::size_t>(p.query_sample));
  for (std::size_t i = queries.size() - span; i < queries.size(); ++i)
    for (const auto& c : queries[i].claims) topic_counts[c.topic] += 1;
  run.query_entropy = topic_counts.empty() ? 0.0 : entropy_bits(topic_counts);

  for (auto& [id, e] : entry_work) run.changeset.entry_upserts.push_back(std::move(e));

  log.emit(now, ev::audit_end,
           {{"audited", static_cast<std::int64_t>(run.report.size())},
            {"closed_branches", static_cast<std::int64_t>(run.closed_branches.size())},
            {"query_entropy", run.query_entropy}});
  return run;
}

}  // namespace memgov
