#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "memgov/audit.hpp"
#include "memgov/config.hpp"
#include "memgov/consolidate.hpp"
#include "memgov/contextualize.hpp"
#include "memgov/decay.hpp"
#include "memgov/events.hpp"
#include "memgov/gravity.hpp"
#include "memgov/scheduler.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"
#include "memgov/triage.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct EngineParams {
  ScorerConfig scorer;
  TriageParams triage;
  ConsolidateParams consolidate;
  ContextualizeParams contextualize;
  DecayParams decay;
  AuditParams audit;
  GravityParams gravity;
  SchedulerParams scheduler;
  double ticks_per_cycle = 10.0;
};

EngineParams engine_params_from(const Config& cfg);

struct QueryResult {
  std::vector<ScoredEntry> results;
  std::string commit;  // the snapshot the answer was served from
  Tick served_at = 0;
};

struct CycleReport {
  int cycle = 0;
  std::string consolidate_report;  // routing decisions, jsonl
  std::string audit_report;        // audit lines, jsonl (when audit ran)
  std::vector<std::string> commits;
  std::vector<BranchRef> promoted;
  std::vector<EntryId> integrated;
  int decay_compressed = 0;
  int decay_archived = 0;
  int storage_skips = 0;  // operations skipped because the store was full
  bool audit_ran = false;
  double query_entropy = 0.0;
};

// The whole system behind one door. Two lanes with different latencies:
// the hot lane (ingest, query, record_utility) works against the last
// committed snapshot and never waits for maintenance; the sleep lane
// (run_cycle) runs contextualize -> consolidate -> decay, plus audit on
// its cadence, each operation committing exactly once from a snapshot it
// froze at its own start. Ingestion that arrives while an operation runs
// is captured immediately in the journal and folded into the index right
// after that operation's commit.
class Engine {
 public:
  Engine(std::string store_root, EngineParams params);

  // --- hot lane ---
  TriageResult ingest(const std::string& raw, OriginChannel channel);
  QueryResult query(const ClaimList& query_claims, std::size_t top_k = 3);
  void record_utility(const EntryId& id, double outcome);

  // --- sleep lane ---
  CycleReport run_cycle();
  WindowPlan plan_window(const HomeostasisVector& hv);

  // --- clock ---
  Tick now() const;
  void advance(Tick dt);
  int cycles_completed() const;

  // --- inspection ---
  Store& store() { return store_; }
  const EventLog& log() const { return log_; }
  EventLog& log() { return log_; }
  Snapshot snapshot() const { return store_.snapshot(); }
  GravityReport gravity_report() const;
  std::vector<Violation> validate() const;
  const EngineParams& params() const { return p_; }
  EngineParams& params() { return p_; }

  // Test hook, called after the consolidation snapshot is frozen and
  // before the pass runs — a stand-in for "the user shows up mid-window".
  void set_mid_cycle_hook(std::function<void()> fn);

 private:
  void flush_staged_locked();  // requires mu_ held
  Tick tick(Tick cost);

  mutable std::mutex mu_;  // guards clock, staging, query/access ledgers
  std::mutex window_mu_;   // serializes sleep windows
  Store store_;
  EngineParams p_;
  EventLog log_;
  ClaimScorer scorer_;
  Scheduler sched_;
  Tick clock_ = 0;
  int cycle_ = 0;
  bool op_running_ = false;
  std::deque<QueryRecord> queries_;
  std::map<EntryId, AccessDelta> access_;
  std::vector<std::pair<BufferEntry, std::string>> staged_;
  std::function<void()> mid_hook_;
};

}  // namespace memgov
