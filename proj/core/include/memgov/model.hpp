#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memgov/events.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct IndexState;  // store.hpp

// Immutable ingested item awaiting consolidation.
struct BufferEntry {
  EntryId id;  // content hash of the canonicalized content bytes
  Tick ingested_at = 0;
  BlobHash source_ptr;
  OriginChannel origin = OriginChannel::conversation;
  double initial_priority = 0.5;
  std::vector<std::pair<EntryId, EdgeKind>> candidate_edges;
  ClaimList claims;
  BufferState state = BufferState::pending;
  std::string reject_reason;      // required for rejected, empty otherwise
  int cycles_in_buffer = 0;       // consolidation cycles seen while pending
  bool divergence_marker = false; // vocabulary outside the current ontology
};

struct UtilitySample {
  Tick ts = 0;
  double outcome = 0.0;  // [-1, 1]
};

// Active knowledge unit. Content bytes live in the blob store under
// commit_hash; claims are the parsed form of those bytes and the two are
// kept consistent (validate_state checks it).
struct WikiEntry {
  EntryId id;
  BlobHash commit_hash;
  ClaimList claims;
  double vitality = 0.0;
  double gravity_base = 0.0;
  double gravity_eff = 0.0;
  bool quarantined = false;
  bool gravity_protected = false;
  Tick last_accessed = 0;
  std::int64_t access_count = 0;
  std::vector<UtilitySample> utility_trace;
  double summarization_distortion = 0.0;
  CohesionBucket cohesion_bucket = CohesionBucket::high;
  WikiState state = WikiState::active;

  OriginChannel origin = OriginChannel::conversation;
  std::string cold_id;            // linkout for external-origin entries
  int depth = 0;                  // stored working depth, 0 = not depth-fitted
  double audit_gravity_factor = 1.0;  // persistent reduction applied by AUDIT
  bool audit_priority = false;        // jump the audit queue next run
  bool divergence_marker = false;
  int negative_utility_cycles = 0;    // consecutive cycles, drives rescoring
  bool review_flagged = false;        // set on model-version mismatch
};

struct Edge {
  EntryId src;
  EntryId dst;
  EdgeKind kind = EdgeKind::dependency;
  double weight = 1.0;
  bool dangling_to_tombstone = false;

  bool valid() const {
    return !src.empty() && !dst.empty() && src != dst && weight >= 0.0 && weight <= 1.0;
  }
};

struct ColdObject {
  std::string id;
  BlobHash blob_hash;
  std::string origin_locator;
  bool linkout_valid = true;  // non-optional commitment
  ColdState state = ColdState::stored;
  std::string prior_id;  // lineage: the object this one re-compressed
};

struct AuditRecord {
  std::int64_t id = 0;
  EntryId entry_id;
  Tick ts = 0;
  SuspensionResult suspension_result = SuspensionResult::unchanged;
  AuditOutcome outcome = AuditOutcome::restored;
  AuditRecordState state = AuditRecordState::created;
  bool untested = false;  // no prior query ever accessed the entry
  double delta = 0.0;
};

struct MinorityBranch {
  BranchRef branch_ref;
  EntryId incumbent_id;
  std::vector<EntryId> member_ids;  // sorted, unique
  int contradiction_edge_count = 0;
  int cycles_open = 0;
  BranchState state = BranchState::open;
  std::string base_commit;
  std::vector<int> member_count_history;  // per consolidation cycle
  std::string close_reason;               // required when closed
};

// Lifecycle events. Not every event applies to every entity kind;
// transition() rejects undefined pairs with UnknownEvent.
enum class LifecycleEvent {
  consolidate,  // buffer: pending -> consolidated
  reject,       // buffer: pending -> rejected
  expire,       // buffer: pending -> expired
  decay,        // wiki: active -> decaying
  archive,      // wiki: active/decaying -> archived
  reactivate,   // defined for no state; probes the terminal rule
  recall,       // cold: stored -> recalled
  recompress,   // cold: recalled -> recompressed
  promote,      // branch: open -> promoted
  close,        // branch: open -> closed; audit record: created -> closed
};

const char* to_string(LifecycleEvent e);

// Transition tables, exposed so the reachable-state graph can be checked
// exhaustively. nullopt = (state, event) pair is not defined.
std::optional<BufferState> buffer_target(BufferState from, LifecycleEvent e);
std::optional<WikiState> wiki_target(WikiState from, LifecycleEvent e);
std::optional<ColdState> cold_target(ColdState from, LifecycleEvent e);
std::optional<BranchState> branch_target(BranchState from, LifecycleEvent e);
std::optional<AuditRecordState> audit_record_target(AuditRecordState from, LifecycleEvent e);

// The only way any module mutates lifecycle state. Appends one immutable
// transition record to the log; touches no content bytes and no flags.
void transition(BufferEntry& e, LifecycleEvent ev, EventLog& log, Tick now);
void transition(WikiEntry& e, LifecycleEvent ev, EventLog& log, Tick now);
void transition(ColdObject& e, LifecycleEvent ev, EventLog& log, Tick now);
void transition(MinorityBranch& e, LifecycleEvent ev, EventLog& log, Tick now);
void transition(AuditRecord& e, LifecycleEvent ev, EventLog& log, Tick now);

// Deterministic cold-object id for an archived content blob.
std::string cold_id_for(const BlobHash& blob_hash);

// One retrieval against the wiki, as remembered by the engine. The audit
// suspension test replays these; depth inference reads their topics.
struct QueryRecord {
  Tick tick = 0;
  ClaimList claims;
  std::vector<EntryId> accessed;  // ids the query was served from
};

// Access-ledger delta folded into the next sleep-window commit.
struct AccessDelta {
  std::int64_t count = 0;
  Tick last = 0;
  std::vector<UtilitySample> utility;
};

void to_json(nlohmann::json& j, const BufferEntry& e);
void from_json(const nlohmann::json& j, BufferEntry& e);
void to_json(nlohmann::json& j, const UtilitySample& s);
void from_json(const nlohmann::json& j, UtilitySample& s);
void to_json(nlohmann::json& j, const WikiEntry& e);
void from_json(const nlohmann::json& j, WikiEntry& e);
void to_json(nlohmann::json& j, const Edge& e);
void from_json(const nlohmann::json& j, Edge& e);
void to_json(nlohmann::json& j, const ColdObject& c);
void from_json(const nlohmann::json& j, ColdObject& c);
void to_json(nlohmann::json& j, const AuditRecord& r);
void from_json(const nlohmann::json& j, AuditRecord& r);
void to_json(nlohmann::json& j, const MinorityBranch& b);
void from_json(const nlohmann::json& j, MinorityBranch& b);
void to_json(nlohmann::json& j, const ClaimTuple& c);
void from_json(const nlohmann::json& j, ClaimTuple& c);

struct Violation {
  std::string rule;       // e.g. BrokenCommitHash
  std::string object_id;  // offending object
  std::string detail;
};

// Checks every required invariant over a whole-system snapshot.
// Violations are data, not errors: an empty list means the state is valid.
class Store;
std::vector<Violation> validate_state(const IndexState& state, const Store& store);

}  // namespace memgov
