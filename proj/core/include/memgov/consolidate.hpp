#pragma once

#include <string>
#include <vector>

#include "memgov/config.hpp"
#include "memgov/events.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct ConsolidateParams {
  double support_threshold = 0.6;        // pairwise support edge cut
  double contradiction_threshold = 0.5;  // pairwise contradiction edge cut
  double cohesion_w_similarity = 0.8;
  double cohesion_w_task = 0.2;
  double cohesion_w_contradiction = 1.0;
  int min_cluster_size = 2;
  double friction = 1.5;           // promotion resistance multiplier
  double safety_friction = 10.0;   // applied when any member is safety-flagged
  double diversity_bonus = 0.5;    // channel-diversity pressure uplift
  int buffer_ttl_cycles = 3;
  double integrate_edge_threshold = 0.6;  // dependency edge to nearest neighbor
  int negative_utility_cycles = 2;        // mid-flag rescore trigger
  bool promotion_enabled = true;
  std::string model_version = "scorer/1";
};

ConsolidateParams consolidate_params_from(const Config& cfg);

// Trapezoidal membership in [0,1] with shoulders a<=b<=c<=d.
double trapezoid(double x, double a, double b, double c, double d);

// Bucket with the highest membership at this cohesion; ties go to the
// more conservative (lower) bucket.
CohesionBucket bucket_for(double cohesion);

// Coherence of a candidate against the active wiki: nearest-neighbor
// similarity plus task alignment, minus gravity-weighted contradiction
// against every incumbent it opposes. An empty wiki accepts vacuously
// (best similarity reads 1).
double cohesion_score(const Scorer& scorer, const ClaimList& claims, const IndexState& s,
                      const ConsolidateParams& p);

// Union of member claims, deduplicated per (topic, polarity) keeping the
// strongest, in canonical order — the content of a promoted replacement.
ClaimList merge_claims(const std::vector<const ClaimList*>& members);

struct RoutingDecision {
  EntryId entry;
  double cohesion = 0.0;
  CohesionBucket bucket = CohesionBucket::low;
  std::string action;      // integrate | integrate-flagged | branch-create |
                           // branch-extend | promote-member | held | expired |
                           // rescore-accept | rescore-keep | quarantine
  std::string branch;      // set for branch actions
  std::string resolution;  // divergence handling, when marked
  double pressure = -1.0;  // set for branch actions
};

struct ConsolidateRun {
  Changeset changeset;
  std::vector<RoutingDecision> report;
  std::vector<BranchRef> promoted;
  std::vector<EntryId> integrated;
  int expired = 0;
  int held = 0;

  // Stable one-line-per-decision serialization; byte-identical across
  // repeated runs over the same snapshot.
  std::string report_jsonl() const;
};

// One full consolidation pass over a frozen snapshot: buffer TTL sweep,
// pairwise structural pass over the workset (pending rows plus open branch
// members), wiki-coherence scoring, fuzzy bucketing, routing. Contradicting
// clusters land in minority branches keyed by the incumbent they oppose;
// a branch whose accumulated pressure clears the incumbent's gravity
// friction replaces it atomically (incumbent starts decaying, the merged
// replacement goes active, members consolidate, the branch is promoted).
// The caller commits the returned changeset; this is the cycle's one commit.
ConsolidateRun run_consolidate(const Snapshot& snap, const Scorer& scorer,
                               const ConsolidateParams& p, Tick now, EventLog& log);

}  // namespace memgov
