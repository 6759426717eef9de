#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memgov/events.hpp"
#include "memgov/model.hpp"
#include "memgov/types.hpp"

namespace memgov {

// Whole-system operational state. Content bytes live in the blob store;
// this is everything else. Ordered maps keep serialization canonical.
struct IndexState {
  std::map<EntryId, BufferEntry> buffer;
  std::map<EntryId, WikiEntry> entries;
  std::vector<Edge> edges;
  std::vector<AuditRecord> audit_log;
  std::map<BranchRef, MinorityBranch> branches;
  std::map<std::string, ColdObject> cold;

  std::string model_version = "scorer/1";
  std::int64_t commit_seq = 0;
  std::string parent_commit;
  Tick committed_at = 0;

  const WikiEntry* find_entry(const EntryId& id) const;
  const BufferEntry* find_buffer(const EntryId& id) const;
  const ColdObject* find_cold(const std::string& id) const;
  const MinorityBranch* find_branch(const BranchRef& ref) const;
  // True if the id names anything ever admitted: buffer, wiki (any state),
  // cold object or branch. The basis of the no-deletion guarantee.
  bool resolves(const std::string& id) const;

  // Active + decaying entries sorted ascending by vitality (tie: id asc).
  std::vector<const WikiEntry*> by_vitality() const;
  std::vector<const Edge*> edges_from(const EntryId& src) const;
  std::vector<const Edge*> edges_to(const EntryId& dst) const;
};

void to_json(nlohmann::json& j, const IndexState& s);
void from_json(const nlohmann::json& j, IndexState& s);

struct Snapshot {
  std::shared_ptr<const IndexState> state;
  std::string commit_id;

  const IndexState& operator*() const { return *state; }
  const IndexState* operator->() const { return state.get(); }
};

// One atomic batch of writes. Upserts replace whole rows keyed by id;
// edges are keyed by (src, dst, kind). `tombstones` lists wiki ids whose
// content has been moved to cold storage this run: the store verifies each
// is archived with a resolving cold linkout, then flags incident edges.
struct Changeset {
  std::vector<std::string> blobs;  // raw bytes, content-addressed on write
  std::vector<BufferEntry> buffer_upserts;
  std::vector<WikiEntry> entry_upserts;
  std::vector<Edge> edge_upserts;
  std::vector<MinorityBranch> branch_upserts;
  std::vector<AuditRecord> audit_appends;
  std::vector<ColdObject> cold_upserts;
  std::vector<EntryId> tombstones;
  std::optional<std::string> model_version;

  bool empty() const;
};

// Preserves the entry's current content as a cold object (reusing an
// existing one for the same bytes) and points the entry's linkout at it.
// Used before any operation replaces or retires the content.
void archive_entry_content(const IndexState& s, Changeset& cs, WikiEntry& e, EventLog& log,
                           Tick now);

// Append-only, content-addressed store with snapshot isolation.
//
// Readers take an immutable Snapshot and never block: a commit builds a
// fresh IndexState and swaps one pointer. Writers are serialized; a commit
// against anything but the current head throws StaleSnapshot. Nothing is
// ever overwritten or deleted; every commit keeps its parent chain.
//
// With a root directory the index is durable: blobs at objects/xx/<hash>,
// the head pointer in index.json (written temp + fsync + rename as the
// single atomic step), the event log appended to events.jsonl. With an
// empty root everything stays in memory (simulation and test mode).
class Store {
 public:
  explicit Store(std::string root_dir = "");

  Snapshot snapshot() const;

  // Applies the changeset on top of `base`, emits one commit event into
  // `log`, persists, and installs the new head. Returns the commit id.
  std::string commit(const Snapshot& base, const Changeset& cs, Tick now, EventLog& log);

  BlobHash put_blob(const std::string& bytes);  // idempotent
  std::optional<std::string> get_blob(const BlobHash& hash) const;
  bool has_blob(const BlobHash& hash) const;

  // Durably appends any events newer than the last persisted one without
  // committing. Lets a process flush read-only activity before exiting.
  void sync_events(const EventLog& log);
  std::int64_t event_hwm() const;

  bool in_memory() const { return root_.empty(); }
  const std::string& root() const { return root_; }

  // Optional cap on active wiki entries; commits that would exceed it throw
  // StorageFull. Storage-pressure experiments set this.
  void set_capacity(std::optional<std::size_t> max_active_entries);

  // Test hook: invoked at named stages inside commit ("blobs-written",
  // "commit-blob-written", "index-renamed"). Throwing simulates a crash at
  // that point; the store must recover to a consistent head.
  void set_commit_failpoint(std::function<void(const char*)> fn);

 private:
  void load_or_init();
  void persist_commit(const std::string& commit_id, const std::string& commit_bytes,
                      const EventLog& log, std::int64_t new_hwm);

  std::string root_;
  mutable std::mutex mu_;  // guards head swap; writers also hold writer_mu_
  std::mutex writer_mu_;
  std::shared_ptr<const IndexState> head_;
  std::string head_commit_;
  std::int64_t event_hwm_ = -1;  // events with seq <= hwm are durable
  std::map<BlobHash, std::string> mem_blobs_;
  std::optional<std::size_t> capacity_;
  std::function<void(const char*)> failpoint_;
};

}  // namespace memgov
