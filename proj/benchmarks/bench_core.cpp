#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "memgov/consolidate.hpp"
#include "memgov/events.hpp"
#include "memgov/gravity.hpp"
#include "memgov/hash.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"

namespace {

using namespace memgov;

ClaimList synth_claims(std::mt19937_64& rng, int n) {
  ClaimList claims;
  for (int i = 0; i < n; ++i) {
    ClaimTuple c;
    c.topic = "topic" + std::to_string(rng() % 24);
    c.polarity = (rng() % 5 == 0) ? -1 : 1;
    c.strength = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
    c.text = "claim " + std::to_string(rng() % 100000);
    claims.push_back(std::move(c));
  }
  return canonical_claims(claims);
}

WikiEntry synth_entry(std::mt19937_64& rng, int n_claims) {
  WikiEntry e;
  e.claims = synth_claims(rng, n_claims);
  e.commit_hash = content_hash(claims_to_jsonl(e.claims));
  e.id = e.commit_hash;
  e.vitality = 0.7;
  e.state = WikiState::active;
  return e;
}

IndexState synth_state(int entries, int edges_per) {
  std::mt19937_64 rng(7);
  IndexState s;
  std::vector<EntryId> ids;
  for (int i = 0; i < entries; ++i) {
    WikiEntry e = synth_entry(rng, 4);
    ids.push_back(e.id);
    s.entries[e.id] = std::move(e);
  }
  for (int i = 0; i < entries; ++i) {
    for (int j = 0; j < edges_per; ++j) {
      Edge ed;
      ed.src = ids[static_cast<std::size_t>(i)];
      ed.dst = ids[rng() % ids.size()];
      if (ed.dst == ed.src) continue;
      ed.kind = EdgeKind::dependency;
      ed.weight = 0.8;
      s.edges.push_back(std::move(ed));
    }
  }
  return s;
}

void bm_similarity(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const ClaimList a = synth_claims(rng, 8);
  const ClaimList b = synth_claims(rng, 8);
  ClaimScorer s;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.similarity(a, b));
  }
}
BENCHMARK(bm_similarity);

void bm_rank(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<std::pair<EntryId, ClaimList>> corpus;
  for (int i = 0; i < state.range(0); ++i) {
    ClaimList c = synth_claims(rng, 4);
    corpus.emplace_back(content_hash(claims_to_jsonl(c)), std::move(c));
  }
  const ClaimList query = synth_claims(rng, 2);
  ClaimScorer s;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank(s, query, corpus, 3));
  }
}
BENCHMARK(bm_rank)->Arg(50)->Arg(200);

void bm_fragmentation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int d = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      if (d != i) adj[static_cast<std::size_t>(i)].push_back(d);
    }
  }
  for (auto _ : state) {
    int total = 0;
    for (int i = 0; i < n; ++i) total += fragmentation_if_removed(adj, i);
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(bm_fragmentation)->Arg(64)->Arg(256);

void bm_gravity(benchmark::State& state) {
  const IndexState s = synth_state(static_cast<int>(state.range(0)), 2);
  const GravityParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_gravity(s, p, 100));
  }
}
BENCHMARK(bm_gravity)->Arg(100)->Arg(300);

void bm_consolidate(benchmark::State& state) {
  std::mt19937_64 rng(6);
  Store store("");
  EventLog log;
  Changeset seed;
  for (int i = 0; i < 50; ++i) {
    WikiEntry e = synth_entry(rng, 4);
    e.gravity_eff = 0.4;
    seed.blobs.push_back(claims_to_jsonl(e.claims));
    seed.entry_upserts.push_back(e);
  }
  for (int i = 0; i < 10; ++i) {
    BufferEntry b;
    b.claims = synth_claims(rng, 3);
    b.id = content_hash(claims_to_jsonl(b.claims));
    b.source_ptr = b.id;
    b.ingested_at = 90;
    seed.blobs.push_back(claims_to_jsonl(b.claims));
    seed.buffer_upserts.push_back(b);
  }
  store.commit(store.snapshot(), seed, 90, log);
  const Snapshot snap = store.snapshot();
  const ClaimScorer scorer;
  const ConsolidateParams p;
  for (auto _ : state) {
    EventLog scratch;
    benchmark::DoNotOptimize(run_consolidate(snap, scorer, p, 100, scratch));
  }
}
BENCHMARK(bm_consolidate);

void bm_store_commit(benchmark::State& state) {
  std::mt19937_64 rng(8);
  for (auto _ : state) {
    state.PauseTiming();
    Store store("");
    EventLog log;
    Changeset cs;
    for (int i = 0; i < 10; ++i) {
      WikiEntry e = synth_entry(rng, 4);
      cs.blobs.push_back(claims_to_jsonl(e.claims));
      cs.entry_upserts.push_back(e);
    }
    state.ResumeTiming();
    benchmark::DoNotOptimize(store.commit(store.snapshot(), cs, 10, log));
  }
}
BENCHMARK(bm_store_commit);

}  // namespace

BENCHMARK_MAIN();
