#include "memgov/model.hpp"

#include <algorithm>
#include <set>

#include "memgov/hash.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"

namespace memgov {

const char* to_string(OriginChannel c) {
  switch (c) {
    case OriginChannel::conversation: return "conversation";
    case OriginChannel::document: return "document";
    case OriginChannel::external: return "external";
  }
  return "?";
}

OriginChannel origin_channel_from(const std::string& s) {
  if (s == "conversation") return OriginChannel::conversation;
  if (s == "document") return OriginChannel::document;
  if (s == "external") return OriginChannel::external;
  throw Error("unknown origin channel: " + s);
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::dependency: return "dependency";
    case EdgeKind::support: return "support";
    case EdgeKind::contradiction: return "contradiction";
  }
  return "?";
}

const char* to_string(BufferState s) {
  switch (s) {
    case BufferState::pending: return "pending";
    case BufferState::consolidated: return "consolidated";
    case BufferState::rejected: return "rejected";
    case BufferState::expired: return "expired";
  }
  return "?";
}

const char* to_string(WikiState s) {
  switch (s) {
    case WikiState::active: return "active";
    case WikiState::decaying: return "decaying";
    case WikiState::archived: return "archived";
  }
  return "?";
}

const char* to_string(ColdState s) {
  switch (s) {
    case ColdState::stored: return "stored";
    case ColdState::recalled: return "recalled";
    case ColdState::recompressed: return "recompressed";
  }
  return "?";
}

const char* to_string(AuditRecordState s) {
  switch (s) {
    case AuditRecordState::created: return "created";
    case AuditRecordState::closed: return "closed";
  }
  return "?";
}

const char* to_string(BranchState s) {
  switch (s) {
    case BranchState::open: return "open";
    case BranchState::promoted: return "promoted";
    case BranchState::closed: return "closed";
  }
  return "?";
}

const char* to_string(CohesionBucket b) {
  switch (b) {
    case CohesionBucket::high: return "high";
    case CohesionBucket::mid: return "mid";
    case CohesionBucket::low: return "low";
  }
  return "?";
}

const char* to_string(SuspensionResult r) {
  switch (r) {
    case SuspensionResult::degraded: return "degraded";
    case SuspensionResult::unchanged: return "unchanged";
    case SuspensionResult::improved: return "improved";
  }
  return "?";
}

const char* to_string(AuditOutcome o) {
  switch (o) {
    case AuditOutcome::restored: return "restored";
    case AuditOutcome::gravity_reduced: return "gravity-reduced";
    case AuditOutcome::archived: return "archived";
  }
  return "?";
}

const char* to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::consolidate: return "consolidate";
    case LifecycleEvent::reject: return "reject";
    case LifecycleEvent::expire: return "expire";
    case LifecycleEvent::decay: return "decay";
    case LifecycleEvent::archive: return "archive";
    case LifecycleEvent::reactivate: return "reactivate";
    case LifecycleEvent::recall: return "recall";
    case LifecycleEvent::recompress: return "recompress";
    case LifecycleEvent::promote: return "promote";
    case LifecycleEvent::close: return "close";
  }
  return "?";
}

namespace {

template <typename T>
T enum_from(const std::string& s, std::initializer_list<T> all, const char* what) {
  for (T v : all)
    if (s == to_string(v)) return v;
  throw Error(std::string("unknown ") + what + ": " + s);
}

BufferState buffer_state_from(const std::string& s) {
  return enum_from(s, {BufferState::pending, BufferState::consolidated, BufferState::rejected,
                       BufferState::expired}, "buffer state");
}
WikiState wiki_state_from(const std::string& s) {
  return enum_from(s, {WikiState::active, WikiState::decaying, WikiState::archived}, "wiki state");
}
ColdState cold_state_from(const std::string& s) {
  return enum_from(s, {ColdState::stored, ColdState::recalled, ColdState::recompressed},
                   "cold state");
}
AuditRecordState audit_state_from(const std::string& s) {
  return enum_from(s, {AuditRecordState::created, AuditRecordState::closed}, "audit record state");
}
BranchState branch_state_from(const std::string& s) {
  return enum_from(s, {BranchState::open, BranchState::promoted, BranchState::closed},
                   "branch state");
}
CohesionBucket bucket_from(const std::string& s) {
  return enum_from(s, {CohesionBucket::high, CohesionBucket::mid, CohesionBucket::low},
                   "cohesion bucket");
}
SuspensionResult suspension_from(const std::string& s) {
  return enum_from(s, {SuspensionResult::degraded, SuspensionResult::unchanged,
                       SuspensionResult::improved}, "suspension result");
}
AuditOutcome outcome_from(const std::string& s) {
  return enum_from(s, {AuditOutcome::restored, AuditOutcome::gravity_reduced,
                       AuditOutcome::archived}, "audit outcome");
}
EdgeKind edge_kind_from(const std::string& s) {
  return enum_from(s, {EdgeKind::dependency, EdgeKind::support, EdgeKind::contradiction},
                   "edge kind");
}

// Events each entity kind understands at all; anything else is UnknownEvent
// for that kind regardless of state.
bool buffer_knows(LifecycleEvent e) {
  return e == LifecycleEvent::consolidate || e == LifecycleEvent::reject ||
         e == LifecycleEvent::expire;
}
bool wiki_knows(LifecycleEvent e) {
  return e == LifecycleEvent::decay || e == LifecycleEvent::archive ||
         e == LifecycleEvent::reactivate;
}
bool cold_knows(LifecycleEvent e) {
  return e == LifecycleEvent::recall || e == LifecycleEvent::recompress;
}
bool branch_knows(LifecycleEvent e) {
  return e == LifecycleEvent::promote || e == LifecycleEvent::close;
}
bool audit_knows(LifecycleEvent e) { return e == LifecycleEvent::close; }

}  // namespace

std::optional<BufferState> buffer_target(BufferState from, LifecycleEvent e) {
  if (from != BufferState::pending) return std::nullopt;  // all others terminal
  switch (e) {
    case LifecycleEvent::consolidate: return BufferState::consolidated;
    case LifecycleEvent::reject: return BufferState::rejected;
    case LifecycleEvent::expire: return BufferState::expired;
    default: return std::nullopt;
  }
}

std::optional<WikiState> wiki_target(WikiState from, LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::decay:
      return from == WikiState::active ? std::optional(WikiState::decaying) : std::nullopt;
    case LifecycleEvent::archive:
      return (from == WikiState::active || from == WikiState::decaying)
                 ? std::optional(WikiState::archived)
                 : std::nullopt;
    case LifecycleEvent::reactivate:
      // No path out of archived (or anywhere else) by design: archival is
      // terminal for the working set; content stays reachable through cold.
      return std::nullopt;
    default: return std::nullopt;
  }
}

std::optional<ColdState> cold_target(ColdState from, LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::recall:
      return from == ColdState::stored ? std::optional(ColdState::recalled) : std::nullopt;
    case LifecycleEvent::recompress:
      return from == ColdState::recalled ? std::optional(ColdState::recompressed) : std::nullopt;
    default: return std::nullopt;
  }
}

std::optional<BranchState> branch_target(BranchState from, LifecycleEvent e) {
  if (from != BranchState::open) return std::nullopt;
  switch (e) {
    case LifecycleEvent::promote: return BranchState::promoted;
    case LifecycleEvent::close: return BranchState::closed;
    default: return std::nullopt;
  }
}

std::optional<AuditRecordState> audit_record_target(AuditRecordState from, LifecycleEvent e) {
  if (e == LifecycleEvent::close && from == AuditRecordState::created)
    return AuditRecordState::closed;
  return std::nullopt;
}

namespace {

void log_transition(EventLog& log, Tick now, const std::string& entity, LifecycleEvent e,
                    const std::string& from, const std::string& to) {
  log.emit(now, ev::transition,
           {{"entity", entity}, {"event", to_string(e)}, {"from", from}, {"to", to}});
}

[[noreturn]] void bad_transition(const std::string& entity, const char* from, LifecycleEvent e) {
  throw IllegalTransition("illegal transition: " + entity + " " + from + " + " + to_string(e));
}

}  // namespace

void transition(BufferEntry& e, LifecycleEvent ev_, EventLog& log, Tick now) {
  if (!buffer_knows(ev_)) throw UnknownEvent(std::string("buffer entry: ") + to_string(ev_));
  auto tgt = buffer_target(e.state, ev_);
  if (!tgt) bad_transition(e.id, to_string(e.state), ev_);
  log_transition(log, now, e.id, ev_, to_string(e.state), to_string(*tgt));
  e.state = *tgt;
}

void transition(WikiEntry& e, LifecycleEvent ev_, EventLog& log, Tick now) {
  if (!wiki_knows(ev_)) throw UnknownEvent(std::string("wiki entry: ") + to_string(ev_));
  auto tgt = wiki_target(e.state, ev_);
  if (!tgt) bad_transition(e.id, to_string(e.state), ev_);
  log_transition(log, now, e.id, ev_, to_string(e.state), to_string(*tgt));
  e.state = *tgt;
}

void transition(ColdObject& e, LifecycleEvent ev_, EventLog& log, Tick now) {
  if (!cold_knows(ev_)) throw UnknownEvent(std::string("cold object: ") + to_string(ev_));
  auto tgt = cold_target(e.state, ev_);
  if (!tgt) bad_transition(e.id, to_string(e.state), ev_);
  log_transition(log, now, e.id, ev_, to_string(e.state), to_string(*tgt));
  e.state = *tgt;
}

void transition(MinorityBranch& e, LifecycleEvent ev_, EventLog& log, Tick now) {
  if (!branch_knows(ev_)) throw UnknownEvent(std::string("branch: ") + to_string(ev_));
  auto tgt = branch_target(e.state, ev_);
  if (!tgt) bad_transition(e.branch_ref, to_string(e.state), ev_);
  log_transition(log, now, e.branch_ref, ev_, to_string(e.state), to_string(*tgt));
  e.state = *tgt;
}

void transition(AuditRecord& e, LifecycleEvent ev_, EventLog& log, Tick now) {
  if (!audit_knows(ev_)) throw UnknownEvent(std::string("audit record: ") + to_string(ev_));
  auto tgt = audit_record_target(e.state, ev_);
  if (!tgt) bad_transition("audit#" + std::to_string(e.id), to_string(e.state), ev_);
  log_transition(log, now, "audit#" + std::to_string(e.id), ev_, to_string(e.state),
                 to_string(*tgt));
  e.state = *tgt;
}

std::string cold_id_for(const BlobHash& blob_hash) { return "cold-" + blob_hash.substr(0, 12); }

void to_json(nlohmann::json& j, const ClaimTuple& c) {
  j = {{"topic", c.topic}, {"polarity", c.polarity}, {"strength", c.strength}, {"text", c.text}};
}

void from_json(const nlohmann::json& j, ClaimTuple& c) {
  c.topic = j.at("topic").get<std::string>();
  c.polarity = j.at("polarity").get<int>();
  c.strength = j.at("strength").get<double>();
  c.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const BufferEntry& e) {
  j = {{"id", e.id},
       {"ingested_at", e.ingested_at},
       {"source_ptr", e.source_ptr},
       {"origin", to_string(e.origin)},
       {"initial_priority", e.initial_priority},
       {"claims", e.claims},
       {"state", to_string(e.state)},
       {"reject_reason", e.reject_reason},
       {"cycles_in_buffer", e.cycles_in_buffer},
       {"divergence_marker", e.divergence_marker}};
  auto& edges = j["candidate_edges"] = nlohmann::json::array();
  for (const auto& [dst, kind] : e.candidate_edges)
    edges.push_back({{"dst", dst}, {"kind", to_string(kind)}});
}

void from_json(const nlohmann::json& j, BufferEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.ingested_at = j.at("ingested_at").get<Tick>();
  e.source_ptr = j.at("source_ptr").get<std::string>();
  e.origin = origin_channel_from(j.at("origin").get<std::string>());
  e.initial_priority = j.at("initial_priority").get<double>();
  e.claims = j.at("claims").get<ClaimList>();
  e.state = buffer_state_from(j.at("state").get<std::string>());
  e.reject_reason = j.at("reject_reason").get<std::string>();
  e.cycles_in_buffer = j.at("cycles_in_buffer").get<int>();
  e.divergence_marker = j.at("divergence_marker").get<bool>();
  e.candidate_edges.clear();
  for (const auto& ce : j.at("candidate_edges"))
    e.candidate_edges.emplace_back(ce.at("dst").get<std::string>(),
                                   edge_kind_from(ce.at("kind").get<std::string>()));
}

void to_json(nlohmann::json& j, const UtilitySample& s) {
  j = {{"ts", s.ts}, {"outcome", s.outcome}};
}

void from_json(const nlohmann::json& j, UtilitySample& s) {
  s.ts = j.at("ts").get<Tick>();
  s.outcome = j.at("outcome").get<double>();
}

void to_json(nlohmann::json& j, const WikiEntry& e) {
  j = {{"id", e.id},
       {"commit_hash", e.commit_hash},
       {"claims", e.claims},
       {"vitality", e.vitality},
       {"gravity_base", e.gravity_base},
       {"gravity_eff", e.gravity_eff},
       {"quarantined", e.quarantined},
       {"gravity_protected", e.gravity_protected},
       {"last_accessed", e.last_accessed},
       {"access_count", e.access_count},
       {"utility_trace", e.utility_trace},
       {"summarization_distortion", e.summarization_distortion},
       {"cohesion_bucket", to_string(e.cohesion_bucket)},
       {"state", to_string(e.state)},
       {"origin", to_string(e.origin)},
       {"cold_id", e.cold_id},
       {"depth", e.depth},
       {"audit_gravity_factor", e.audit_gravity_factor},
       {"audit_priority", e.audit_priority},
       {"divergence_marker", e.divergence_marker},
       {"negative_utility_cycles", e.negative_utility_cycles},
       {"review_flagged", e.review_flagged}};
}

void from_json(const nlohmann::json& j, WikiEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.commit_hash = j.at("commit_hash").get<std::string>();
  e.claims = j.at("claims").get<ClaimList>();
  e.vitality = j.at("vitality").get<double>();
  e.gravity_base = j.at("gravity_base").get<double>();
  e.gravity_eff = j.at("gravity_eff").get<double>();
  e.quarantined = j.at("quarantined").get<bool>();
  e.gravity_protected = j.at("gravity_protected").get<bool>();
  e.last_accessed = j.at("last_accessed").get<Tick>();
  e.access_count = j.at("access_count").get<std::int64_t>();
  e.utility_trace = j.at("utility_trace").get<std::vector<UtilitySample>>();
  e.summarization_distortion = j.at("summarization_distortion").get<double>();
  e.cohesion_bucket = bucket_from(j.at("cohesion_bucket").get<std::string>());
  e.state = wiki_state_from(j.at("state").get<std::string>());
  e.origin = origin_channel_from(j.at("origin").get<std::string>());
  e.cold_id = j.at("cold_id").get<std::string>();
  e.depth = j.at("depth").get<int>();
  e.audit_gravity_factor = j.at("audit_gravity_factor").get<double>();
  e.audit_priority = j.at("audit_priority").get<bool>();
  e.divergence_marker = j.at("divergence_marker").get<bool>();
  e.negative_utility_cycles = j.at("negative_utility_cycles").get<int>();
  e.review_flagged = j.at("review_flagged").get<bool>();
}

void to_json(nlohmann::json& j, const Edge& e) {
  j = {{"src", e.src},
       {"dst", e.dst},
       {"kind", to_string(e.kind)},
       {"weight", e.weight},
       {"dangling_to_tombstone", e.dangling_to_tombstone}};
}

void from_json(const nlohmann::json& j, Edge& e) {
  e.src = j.at("src").get<std::string>();
  e.dst = j.at("dst").get<std::string>();
  e.kind = edge_kind_from(j.at("kind").get<std::string>());
  e.weight = j.at("weight").get<double>();
  e.dangling_to_tombstone = j.at("dangling_to_tombstone").get<bool>();
}

void to_json(nlohmann::json& j, const ColdObject& c) {
  j = {{"id", c.id},
       {"blob_hash", c.blob_hash},
       {"origin_locator", c.origin_locator},
       {"linkout_valid", c.linkout_valid},
       {"state", to_string(c.state)},
       {"prior_id", c.prior_id}};
}

void from_json(const nlohmann::json& j, ColdObject& c) {
  c.id = j.at("id").get<std::string>();
  c.blob_hash = j.at("blob_hash").get<std::string>();
  c.origin_locator = j.at("origin_locator").get<std::string>();
  c.linkout_valid = j.at("linkout_valid").get<bool>();
  c.state = cold_state_from(j.at("state").get<std::string>());
  c.prior_id = j.at("prior_id").get<std::string>();
}

void to_json(nlohmann::json& j, const AuditRecord& r) {
  j = {{"id", r.id},
       {"entry_id", r.entry_id},
       {"ts", r.ts},
       {"suspension_result", to_string(r.suspension_result)},
       {"outcome", to_string(r.outcome)},
       {"state", to_string(r.state)},
       {"untested", r.untested},
       {"delta", r.delta}};
}

void from_json(const nlohmann::json& j, AuditRecord& r) {
  r.id = j.at("id").get<std::int64_t>();
  r.entry_id = j.at("entry_id").get<std::string>();
  r.ts = j.at("ts").get<Tick>();
  r.suspension_result = suspension_from(j.at("suspension_result").get<std::string>());
  r.outcome = outcome_from(j.at("outcome").get<std::string>());
  r.state = audit_state_from(j.at("state").get<std::string>());
  r.untested = j.at("untested").get<bool>();
  r.delta = j.at("delta").get<double>();
}

void to_json(nlohmann::json& j, const MinorityBranch& b) {
  j = {{"branch_ref", b.branch_ref},
       {"incumbent_id", b.incumbent_id},
       {"member_ids", b.member_ids},
       {"contradiction_edge_count", b.contradiction_edge_count},
       {"cycles_open", b.cycles_open},
       {"state", to_string(b.state)},
       {"base_commit", b.base_commit},
       {"member_count_history", b.member_count_history},
       {"close_reason", b.close_reason}};
}

void from_json(const nlohmann::json& j, MinorityBranch& b) {
  b.branch_ref = j.at("branch_ref").get<std::string>();
  b.incumbent_id = j.at("incumbent_id").get<std::string>();
  b.member_ids = j.at("member_ids").get<std::vector<std::string>>();
  b.contradiction_edge_count = j.at("contradiction_edge_count").get<int>();
  b.cycles_open = j.at("cycles_open").get<int>();
  b.state = branch_state_from(j.at("state").get<std::string>());
  b.base_commit = j.at("base_commit").get<std::string>();
  b.member_count_history = j.at("member_count_history").get<std::vector<int>>();
  b.close_reason = j.at("close_reason").get<std::string>();
}

std::vector<Violation> validate_state(const IndexState& state, const Store& store) {
  std::vector<Violation> out;
  auto add = [&out](std::string rule, std::string id, std::string detail) {
    out.push_back({std::move(rule), std::move(id), std::move(detail)});
  };

  for (const auto& [id, e] : state.entries) {
    if (!store.has_blob(e.commit_hash)) {
      add("BrokenCommitHash", id, "content blob missing: " + e.commit_hash);
    } else if (content_hash(claims_to_jsonl(e.claims)) != e.commit_hash) {
      add("BrokenCommitHash", id, "claims do not serialize to commit_hash");
    }
    for (const auto& c : e.claims)
      if (!c.valid()) add("MalformedClaim", id, "claim on topic '" + c.topic + "'");
    if (e.summarization_distortion < 0.0)
      add("NegativeDistortion", id, std::to_string(e.summarization_distortion));
    if (!e.cold_id.empty()) {
      const ColdObject* co = state.find_cold(e.cold_id);
      if (co == nullptr)
        add("InvalidLinkout", id, "cold object missing: " + e.cold_id);
      else if (!co->linkout_valid)
        add("InvalidLinkout", id, "linkout marked invalid: " + e.cold_id);
    }
    if (e.summarization_distortion > 0.0 && e.cold_id.empty())
      add("OriginalDiscarded", id, "compressed without archived original");
    if (e.state == WikiState::archived && e.cold_id.empty())
      add("ArchivedContentMissing", id, "archived without cold linkout");
  }

  for (const auto& [cid, co] : state.cold) {
    if (!store.has_blob(co.blob_hash))
      add("InvalidLinkout", cid, "cold blob missing: " + co.blob_hash);
    if (!co.prior_id.empty() && state.find_cold(co.prior_id) == nullptr)
      add("InvalidLinkout", cid, "prior cold object missing: " + co.prior_id);
  }

  std::set<std::tuple<std::string, std::string, int>> seen_edges;
  for (const auto& e : state.edges) {
    const std::string edge_id = e.src + "->" + e.dst;
    if (!e.valid()) add("MalformedEdge", edge_id, "invalid endpoints or weight");
    const bool src_ok = state.find_entry(e.src) != nullptr || state.find_buffer(e.src) != nullptr;
    const bool dst_ok = state.find_entry(e.dst) != nullptr || state.find_buffer(e.dst) != nullptr;
    if (!src_ok || !dst_ok) add("EdgeEndpointMissing", edge_id, !src_ok ? e.src : e.dst);
    const WikiEntry* dst = state.find_entry(e.dst);
    const WikiEntry* src = state.find_entry(e.src);
    const bool touches_tombstone = (dst != nullptr && dst->state == WikiState::archived) ||
                                   (src != nullptr && src->state == WikiState::archived);
    if (touches_tombstone && !e.dangling_to_tombstone)
      add("DanglingNotFlagged", edge_id, "endpoint is archived");
    if (!seen_edges.emplace(e.src, e.dst, static_cast<int>(e.kind)).second)
      add("DuplicateEdge", edge_id, to_string(e.kind));
  }

  for (const auto& [id, b] : state.buffer) {
    if (b.state == BufferState::rejected && b.reject_reason.empty())
      add("RejectedWithoutReason", id, "");
    if (!store.has_blob(b.source_ptr))
      add("BrokenSourcePointer", id, "source blob missing: " + b.source_ptr);
  }

  for (const auto& [ref, br] : state.branches) {
    if (br.state == BranchState::closed && br.close_reason.empty())
      add("SilentBranchClosure", ref, "");
    if (state.find_entry(br.incumbent_id) == nullptr)
      add("BranchMemberMissing", ref, "incumbent: " + br.incumbent_id);
    for (const auto& m : br.member_ids)
      if (!state.resolves(m)) add("BranchMemberMissing", ref, "member: " + m);
  }

  for (const auto& r : state.audit_log)
    if (!state.resolves(r.entry_id))
      add("AuditRecordOrphan", "audit#" + std::to_string(r.id), r.entry_id);

  return out;
}

}  // namespace memgov
