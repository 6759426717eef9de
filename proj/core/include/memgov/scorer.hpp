#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memgov/types.hpp"

namespace memgov {

// Claim lists are the only content representation the engine reasons over.
// Wire form is JSON-lines, one claim per line, keys sorted:
//   {"polarity":1,"strength":0.9,"text":"...","topic":"..."}
std::string claims_to_jsonl(const ClaimList& claims);
ClaimList claims_from_jsonl(const std::string& text);  // throws MalformedContent

// Canonical order: topic asc, polarity desc, strength desc, text asc.
// Serializing a canonicalized list is the entry's content identity.
ClaimList canonical_claims(ClaimList claims);

// Shannon entropy in bits over a count distribution. Throws EmptyDistribution
// when the total mass is zero.
double entropy_bits(const std::map<std::string, std::int64_t>& counts);

struct ScorerConfig {
  std::vector<std::string> task_topics;    // empty = no task context
  std::vector<std::string> safety_topics;  // routed to maximum friction
};

// Deterministic scorer over claim tuples. All scores are pure functions of
// their inputs so repeated runs over a frozen snapshot reproduce bytes.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Symmetric, in [0,1]; 1 for identical claim sets, 0 for topic-disjoint.
  virtual double similarity(const ClaimList& a, const ClaimList& b) const = 0;

  // In [0,1]; mass of opposite-polarity agreement on shared topics.
  virtual double contradiction(const ClaimList& a, const ClaimList& b) const = 0;

  // Strength-weighted overlap with the configured task topics. With no task
  // context every entry is treated as half-aligned (0.5).
  virtual double task_alignment(const ClaimList& claims) const = 0;

  virtual bool safety_flagged(const ClaimList& claims) const = 0;
};

class ClaimScorer final : public Scorer {
 public:
  ClaimScorer() = default;
  explicit ClaimScorer(ScorerConfig cfg) : cfg_(std::move(cfg)) {}

  double similarity(const ClaimList& a, const ClaimList& b) const override;
  double contradiction(const ClaimList& a, const ClaimList& b) const override;
  double task_alignment(const ClaimList& claims) const override;
  bool safety_flagged(const ClaimList& claims) const override;

 private:
  ScorerConfig cfg_;
};

struct ScoredEntry {
  EntryId id;
  double score = 0.0;
};

// Retrieval over a corpus of (id, claims). An entry's score is its query
// similarity minus the worst contradiction pressure any other corpus entry
// exerts on it, clamped to [0,1]. Adding a supporting entry can never lower
// another entry's score; adding a contradicting one can never raise it.
double query_score(const Scorer& s, const ClaimList& query, const EntryId& id,
                   const std::vector<std::pair<EntryId, ClaimList>>& corpus);

std::vector<ScoredEntry> rank(const Scorer& s, const ClaimList& query,
                              const std::vector<std::pair<EntryId, ClaimList>>& corpus,
                              std::size_t top_k);

}  // namespace memgov
