#pragma once

#include <deque>
#include <string>
#include <vector>

#include "memgov/config.hpp"
#include "memgov/events.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct AuditParams {
  int top_n = 5;                  // heaviest entries reviewed per run
  int query_sample = 20;          // recent accessing queries replayed
  double degrade_delta = 0.05;    // |mean delta| below this is "unchanged"
  double gravity_reduction = 0.5; // factor applied on an unchanged verdict
  int branch_stale_cycles = 3;    // no member growth for this long = stale
  int cadence_cycles = 10;        // scheduler runs audit every Nth cycle
};

AuditParams audit_params_from(const Config& cfg);

// Virtual removal: replays recent queries that were served from `target`
// against the corpus with and without it. Positive delta means answers get
// worse without the entry (it earns its gravity); negative means they get
// better (it interferes). No accessing queries on record -> unchanged, and
// the record says so.
struct SuspensionOutcome {
  SuspensionResult result = SuspensionResult::unchanged;
  double delta = 0.0;
  bool untested = false;
  int queries_replayed = 0;
};

SuspensionOutcome suspension_test(const IndexState& s, const Scorer& scorer,
                                  const EntryId& target,
                                  const std::deque<QueryRecord>& queries, const AuditParams& p);

struct AuditReportLine {
  EntryId entry;
  double delta = 0.0;
  SuspensionResult verdict = SuspensionResult::unchanged;
  AuditOutcome outcome = AuditOutcome::restored;
  bool untested = false;
};

struct AuditRun {
  Changeset changeset;
  std::vector<AuditReportLine> report;
  std::vector<BranchRef> closed_branches;
  double query_entropy = 0.0;  // topical entropy of the replayed query set

  std::string report_jsonl() const;
};

// Reviews the heaviest entries: each gets a suspension test, an appended
// audit record (always before any state changes), and one of three
// outcomes — restored (refreshed), gravity-reduced (an unearned anchor
// loses half its pull), or archived (interference goes to cold storage).
// Open minority branches whose incumbent keeps passing audits while the
// branch stops growing are closed with an explicit reason, their members
// rejected with that reason. The caller commits the changeset.
AuditRun run_audit(const Snapshot& snap, const Scorer& scorer,
                   const std::deque<QueryRecord>& queries, const AuditParams& p, Tick now,
                   EventLog& log);

}  // namespace memgov
