#pragma once

#include <map>
#include <string>

#include "memgov/config.hpp"
#include "memgov/model.hpp"
#include "memgov/types.hpp"

namespace memgov {

struct TriageParams {
  double initial_priority = 0.5;
  int dedup_window_cycles = 2;
  std::size_t max_content_bytes = std::size_t{1} << 20;
  double ticks_per_cycle = 10.0;
  int max_candidate_edges = 4;
};

TriageParams triage_params_from(const Config& cfg);

struct TriageResult {
  enum class Decision { admitted, rejected, duplicate };
  Decision decision = Decision::admitted;
  EntryId id;
  std::string reason;   // rejected: why; duplicate: "in-window" or "resubmission"
  BufferEntry entry;    // admitted or rejected: the row to persist
  std::string content;  // canonical bytes to blob (raw bytes if not decodable)
};

const char* to_string(TriageResult::Decision d);

// Hot-path capture. Deliberately blind to the wiki: the only inputs are the
// raw bytes, the channel, and the buffer itself. Filters garbage (nothing
// parseable, all-zero strengths, oversize), deduplicates by content identity,
// and sketches candidate edges against other pending buffer rows. Rejected
// content is still recorded — nothing that arrives is dropped.
TriageResult triage_ingest(const std::map<EntryId, BufferEntry>& buffer_view,
                           const std::string& raw, OriginChannel channel, Tick now,
                           const TriageParams& p);

}  // namespace memgov
