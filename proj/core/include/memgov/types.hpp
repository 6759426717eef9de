#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace memgov {

// Virtual clock. All timestamps in the engine are monotonic tick counts;
// wall-clock deployments map onto ticks through an adapter, never the
// other way around.
using Tick = std::int64_t;

using EntryId = std::string;   // wiki entry token (content-hash derived)
using BlobHash = std::string;  // sha-256, hex lowercase
using BranchRef = std::string;

enum class OriginChannel { conversation, document, external };

enum class EdgeKind { dependency, support, contradiction };

enum class BufferState { pending, consolidated, rejected, expired };
enum class WikiState { active, decaying, archived };
enum class ColdState { stored, recalled, recompressed };
enum class AuditRecordState { created, closed };
enum class BranchState { open, promoted, closed };

enum class CohesionBucket { high, mid, low };

enum class SuspensionResult { degraded, unchanged, improved };
enum class AuditOutcome { restored, gravity_reduced, archived };

// Atomic unit of semantic content. The scorer operates on these; the
// text field is carried opaquely.
struct ClaimTuple {
  std::string topic;
  int polarity = 1;  // -1 or +1
  double strength = 0.0;
  std::string text;

  bool valid() const {
    return !topic.empty() && (polarity == -1 || polarity == 1) &&
           strength >= 0.0 && strength <= 1.0;
  }
  friend bool operator==(const ClaimTuple&, const ClaimTuple&) = default;
};

using ClaimList = std::vector<ClaimTuple>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IllegalTransition : Error { using Error::Error; };
struct UnknownEvent : Error { using Error::Error; };
struct UnknownEntry : Error { using Error::Error; };
struct StaleSnapshot : Error { using Error::Error; };
struct AtomicityFailure : Error { using Error::Error; };
struct StorageFull : Error { using Error::Error; };
struct AlreadyArchived : Error { using Error::Error; };
struct EmptyClaims : Error { using Error::Error; };
struct EmptyDistribution : Error { using Error::Error; };
struct MalformedContent : Error { using Error::Error; };
struct AlreadyMinimal : Error { using Error::Error; };
struct MissingColdObject : Error { using Error::Error; };
struct MalformedTrace : Error { using Error::Error; };

const char* to_string(OriginChannel c);
const char* to_string(EdgeKind k);
const char* to_string(BufferState s);
const char* to_string(WikiState s);
const char* to_string(ColdState s);
const char* to_string(AuditRecordState s);
const char* to_string(BranchState s);
const char* to_string(CohesionBucket b);
const char* to_string(SuspensionResult r);
const char* to_string(AuditOutcome o);

OriginChannel origin_channel_from(const std::string& s);

}  // namespace memgov
