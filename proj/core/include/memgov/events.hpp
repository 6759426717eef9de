#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "memgov/types.hpp"

namespace memgov {

// One record in the engine's totally ordered event stream. The stream is
// both the transition log and the conformance surface: every rule the
// trace runner enforces is phrased over these records.
struct TraceEvent {
  Tick tick = 0;
  std::int64_t seq = 0;
  std::string op;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static TraceEvent from_json(const nlohmann::json& j);
};

// Canonical op names. Kept as strings so traces from other
// implementations can carry ops this engine never emits.
namespace ev {
inline constexpr const char* ingest_start = "ingest-start";
inline constexpr const char* ingest_end = "ingest-end";
inline constexpr const char* buffer_write = "buffer-write";
inline constexpr const char* wiki_read = "wiki-read";
inline constexpr const char* wiki_write = "wiki-write";
inline constexpr const char* classify = "classify";
inline constexpr const char* window_start = "window-start";
inline constexpr const char* window_end = "window-end";
inline constexpr const char* consolidate_start = "consolidate-start";
inline constexpr const char* consolidate_end = "consolidate-end";
inline constexpr const char* phase1_start = "phase1-start";
inline constexpr const char* phase2_start = "phase2-start";
inline constexpr const char* decay_start = "decay-start";
inline constexpr const char* decay_end = "decay-end";
inline constexpr const char* contextualize_start = "contextualize-start";
inline constexpr const char* contextualize_end = "contextualize-end";
inline constexpr const char* audit_start = "audit-start";
inline constexpr const char* audit_end = "audit-end";
inline constexpr const char* audit_record = "audit-record";
inline constexpr const char* suspend_test = "suspend-test";
inline constexpr const char* commit = "commit";
inline constexpr const char* edge_write = "edge-write";
inline constexpr const char* transition = "transition";
inline constexpr const char* compress = "compress";
inline constexpr const char* cold_store = "cold-store";
inline constexpr const char* depth_rep = "depth-rep";
inline constexpr const char* tombstone = "tombstone";
inline constexpr const char* branch_create = "branch-create";
inline constexpr const char* branch_extend = "branch-extend";
inline constexpr const char* branch_promote = "branch-promote";
inline constexpr const char* branch_close = "branch-close";
inline constexpr const char* hard_delete = "delete";
inline constexpr const char* federation_send = "federation-send";
inline constexpr const char* read_serve = "read-serve";
}  // namespace ev

// Safe for concurrent emitters and readers: the hot read path and a
// running sleep operation both append to the same stream.
class EventLog {
 public:
  // Appends with the next sequence number and returns a copy of the record.
  TraceEvent emit(Tick tick, std::string op, nlohmann::json payload = nlohmann::json::object());

  std::vector<TraceEvent> events() const;
  size_t size() const;
  void clear();

  // Resumes numbering after a reload so persisted and fresh events never
  // collide. Only raises the counter.
  void set_next_seq(std::int64_t seq);

  std::string to_jsonl() const;
  static std::vector<TraceEvent> parse_jsonl(const std::string& text);

  // Transition records only, in the flat JSONL schema
  // {"tick":..,"entity":..,"event":..,"from":..,"to":..}.
  std::string transitions_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::deque<TraceEvent> events_;
  std::int64_t next_seq_ = 0;
};

}  // namespace memgov
