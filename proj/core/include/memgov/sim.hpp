#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "memgov/config.hpp"
#include "memgov/engine.hpp"
#include "memgov/types.hpp"

namespace memgov {

// Deterministic RNG for workload generation. Raw engine draws only —
// mapping to ranges is done here so the stream is identical across
// platforms and standard libraries.
struct SimRng {
  explicit SimRng(std::uint64_t seed) : gen(seed) {}

  std::uint64_t u64() { return gen(); }
  double unit() { return static_cast<double>(u64() >> 11) * (1.0 / 9007199254740992.0); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(u64() % n); }
  std::size_t pick(const std::vector<double>& weights);  // categorical

  std::mt19937_64 gen;
};

struct DriftConfig {
  std::uint64_t seed = 1;
  int cycles = 50;
  int entries_per_cycle = 3;
  int queries_per_cycle = 2;
  int topic_count = 8;
  int foundation_count = 4;   // single-claim charter entries seeded first
  double drift_rate = 0.0;    // per-cycle rotation of the preference vector

  bool inject_minority = false;
  int minority_cycle = 10;
  int minority_every = 0;     // 0 = one bundle; N = repeat every N cycles
  int minority_size = 3;

  bool promotion_enabled = true;
  bool gravity_protection = true;  // false = vitality-only pruning baseline
  std::optional<std::size_t> capacity;
  int audit_cadence = 10;
  double ticks_per_cycle = 10.0;
};

DriftConfig drift_config_from(const Config& cfg);

// The full input stream, generated up front so paired runs that differ
// only in governance flags see byte-identical workloads.
struct CycleScript {
  std::vector<std::pair<std::string, OriginChannel>> arrivals;  // claim jsonl
  std::vector<ClaimList> queries;
};

struct Schedule {
  std::vector<CycleScript> cycles;
  std::vector<ClaimList> probes;          // replayed at the end of the run
  std::vector<std::vector<double>> pref;  // preference vector per cycle
  std::vector<EntryId> foundation_ids;    // wiki ids the charters will take
  std::string contested_topic;
};

Schedule make_schedule(const DriftConfig& cfg);

// Graded outcome of consulting an entry while preferences sit at `pref`:
// 0 for a topically uniform entry, +1 aligned, -1 obsolete.
double utility_outcome(const ClaimList& claims, const std::vector<double>& pref);

// Shannon entropy (bits) of the topic distribution over active entries.
double active_topic_entropy(const IndexState& s);

struct DriftResult {
  DriftConfig config;
  int cycles_run = 0;
  int integrated = 0;
  int promoted = 0;
  int compressed_events = 0;
  int archived = 0;
  int storage_skips = 0;
  int aborted_windows = 0;

  double active_entropy = 0.0;
  int orphans = 0;      // live entries holding a reference into a tombstone
  int broken_refs = 0;  // dangling edges whose source is still live

  std::map<EntryId, std::string> foundation_hash;   // end-state commit hash
  std::map<EntryId, std::string> foundation_state;
  int unprotected_total = 0;
  int unprotected_compressed = 0;

  std::vector<std::vector<EntryId>> probe_results;  // top ids per probe

  nlohmann::json to_json() const;
};

DriftResult run_drift(const DriftConfig& cfg);

// Number of probes whose served id sets differ between two runs.
int probe_divergence(const DriftResult& a, const DriftResult& b);

}  // namespace memgov
