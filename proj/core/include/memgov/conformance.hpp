#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memgov/events.hpp"

namespace memgov {

struct ConformanceViolation {
  std::string rule;
  std::int64_t seq = -1;  // sequence number of the offending event
  std::string detail;
};

struct ConformanceReport {
  std::vector<ConformanceViolation> violations;
  std::size_t events = 0;

  bool ok() const { return violations.empty(); }
  std::string to_text() const;  // one line per violation, stable order
};

// Stable identifiers of every enforced rule, in catalog order. The same
// names appear in docs/conformance.md; tests pin this list.
const std::vector<std::string>& conformance_rules();

// Validates an event stream against the operational protocol: ingestion
// stays blind and identity-only, sleep operations run from a stamped
// snapshot with one index commit each, nothing is compressed before its
// full capture is archived, nothing is deleted, every irreversible step
// leaves a record before the state changes. Pure over the input; a trace
// replays to the same report everywhere.
ConformanceReport check_trace(const std::vector<TraceEvent>& events);

}  // namespace memgov
