#include "memgov/triage.hpp"

#include <algorithm>
#include <set>

#include "memgov/hash.hpp"
#include "memgov/scorer.hpp"

namespace memgov {

TriageParams triage_params_from(const Config& cfg) {
  TriageParams p;
  p.initial_priority = cfg.get("triage.initial_priority", p.initial_priority);
  p.dedup_window_cycles = cfg.get("triage.dedup_window_cycles", p.dedup_window_cycles);
  p.max_content_bytes = static_cast<std::size_t>(
      cfg.get("triage.max_content_bytes", static_cast<long long>(p.max_content_bytes)));
  p.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", p.ticks_per_cycle);
  p.max_candidate_edges = cfg.get("triage.max_candidate_edges", p.max_candidate_edges);
  return p;
}

const char* to_string(TriageResult::Decision d) {
  switch (d) {
    case TriageResult::Decision::admitted: return "admitted";
    case TriageResult::Decision::rejected: return "rejected";
    case TriageResult::Decision::duplicate: return "duplicate";
  }
  return "?";
}

TriageResult triage_ingest(const std::map<EntryId, BufferEntry>& buffer_view,
                           const std::string& raw, OriginChannel channel, Tick now,
                           const TriageParams& p) {
  TriageResult r;

  ClaimList claims;
  std::string reject;
  try {
    r.content = canonicalize(raw);
    r.id = sha256_hex(r.content);
    claims = claims_from_jsonl(r.content);
  } catch (const MalformedContent& e) {
    r.content = raw;
    r.id = sha256_hex(raw);
    reject = std::string("malformed-content: ") + e.what();
  }

  if (auto it = buffer_view.find(r.id); it != buffer_view.end()) {
    r.decision = TriageResult::Decision::duplicate;
    const Tick window = static_cast<Tick>(p.dedup_window_cycles * p.ticks_per_cycle);
    r.reason = (now - it->second.ingested_at) <= window ? "in-window" : "resubmission";
    r.entry = it->second;
    return r;
  }

  if (reject.empty()) {
    if (raw.size() > p.max_content_bytes)
      reject = "oversize";
    else if (claims.empty())
      reject = "no-claims";
    else if (std::all_of(claims.begin(), claims.end(),
                         [](const ClaimTuple& c) { return c.strength == 0.0; }))
      reject = "zero-strength";
    else if (std::any_of(claims.begin(), claims.end(),
                         [](const ClaimTuple& c) { return !c.valid(); }))
      reject = "malformed-claim";
  }

  BufferEntry e;
  e.id = r.id;
  e.ingested_at = now;
  e.source_ptr = r.id;  // buffer rows point at their own captured bytes
  e.origin = channel;
  e.initial_priority = p.initial_priority;
  e.claims = std::move(claims);

  if (!reject.empty()) {
    e.state = BufferState::rejected;
    e.reject_reason = reject;
    r.decision = TriageResult::Decision::rejected;
    r.reason = reject;
    r.entry = std::move(e);
    return r;
  }

  // Cheap structural hints for the sleep path: pending rows sharing a topic.
  std::set<std::string> topics;
  for (const auto& c : e.claims) topics.insert(c.topic);
  for (const auto& [id, other] : buffer_view) {
    if (other.state != BufferState::pending) continue;
    if (static_cast<int>(e.candidate_edges.size()) >= p.max_candidate_edges) break;
    const bool shares = std::any_of(other.claims.begin(), other.claims.end(),
                                    [&topics](const ClaimTuple& c) {
                                      return topics.count(c.topic) > 0;
                                    });
    if (shares) e.candidate_edges.emplace_back(id, EdgeKind::support);
  }

  r.decision = TriageResult::Decision::admitted;
  r.entry = std::move(e);
  return r;
}

}  // namespace memgov
