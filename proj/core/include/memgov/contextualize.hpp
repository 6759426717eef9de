#pragma once

#include <deque>
#include <map>
#include <vector>

#include "memgov/config.hpp"
#include "memgov/events.hpp"
#include "memgov/store.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct ContextualizeParams {
  int query_window = 20;   // recent queries consulted for demand
  int redepth_delta = 2;   // re-inference gap that triggers recompression
};

ContextualizeParams contextualize_params_from(const Config& cfg);

// Working-representation depth for an externally sourced entry, 1 (stub)
// to 5 (near-verbatim): prominence of its topical neighborhood times the
// share of recent queries touching its topics. No neighborhood -> 2.
int infer_depth(const IndexState& s, const ClaimList& claims,
                const std::deque<QueryRecord>& recent_queries, const ContextualizeParams& p);

// Top ceil(n * depth / 5) claims by strength, original order preserved.
// Shallower depths always yield subsets of deeper ones.
ClaimList compress_to_depth(const ClaimList& claims, int depth);

struct ContextualizeAction {
  EntryId entry;
  int depth_before = 0;
  int depth_after = 0;
  std::string action;  // fit | refit | none
};

struct ContextualizeRun {
  Changeset changeset;
  std::vector<ContextualizeAction> report;
  int fitted = 0;
  int refitted = 0;
};

// Fits depth-bounded working representations for external-origin entries.
// The full capture is archived to cold storage before any representation
// replaces it (attempting otherwise is MissingColdObject); a depth
// re-inference differing by at least `redepth_delta` recalls the prior
// cold object and lays down a recompressed successor. Also folds the
// engine's access ledger into the entry rows so the window's first commit
// carries it.
ContextualizeRun run_contextualize(const Snapshot& snap, const Store& store,
                                   const std::deque<QueryRecord>& recent_queries,
                                   const std::map<EntryId, AccessDelta>& access,
                                   const ContextualizeParams& p, Tick now, EventLog& log);

}  // namespace memgov
