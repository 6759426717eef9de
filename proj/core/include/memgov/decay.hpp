#pragma once

#include <vector>

#include "memgov/config.hpp"
#include "memgov/events.hpp"
#include "memgov/gravity.hpp"
#include "memgov/store.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct DecayParams {
  double recency_weight = 0.3;
  double frequency_weight = 0.05;
  double utility_weight = 0.4;
  double gravity_weight = 0.6;
  double wear_penalty = 0.3;
  double threshold = 0.5;
  double ewma_alpha = 0.3;
  double ticks_per_cycle = 10.0;  // one consolidation cycle ~= one day
  int max_actions = 25;           // compress/archive budget per run
  double distortion_step = 0.1;
  // Experimental control: false drops the gravity veto so pruning runs on
  // vitality alone. Simulation baselines only; governed runs keep it on.
  bool respect_protection = true;
};

DecayParams decay_params_from(const Config& cfg);

// Exponentially weighted mean of utility outcomes, oldest first; 0 when
// the trace is empty.
double utility_ewma(const std::vector<UtilitySample>& trace, double alpha);

// The retention score. Every term is structurally present; weights may be
// zero but no term can be removed.
double vitality(const WikiEntry& e, double gravity_eff, const DecayParams& p, Tick now);

// Keep the strongest half of the claims, rounding up; order of equals is
// preserved. Throws AlreadyMinimal when there is nothing left to shed.
ClaimList compress_claims(const ClaimList& claims);

struct DecayAction {
  EntryId entry;
  double vitality = 0.0;
  bool eligible = false;
  std::string action;  // none | compress | decay | archive
};

struct DecayRun {
  Changeset changeset;
  std::vector<DecayAction> report;
  int compressed = 0;
  int transitioned = 0;
  int archived = 0;
};

// One pass of graduated forgetting over a frozen snapshot. Rescores every
// live entry, then walks the low-vitality tail: unprotected entries are
// compressed in place (original archived to cold first), minimal ones slip
// active -> decaying, and minimal decaying ones are archived behind a
// tombstone. Entries at or above the protection floor are never touched,
// however stale. The caller commits the returned changeset.
DecayRun run_decay(const Snapshot& snap, const GravityReport& gravity, const DecayParams& p,
                   Tick now, EventLog& log);

}  // namespace memgov
