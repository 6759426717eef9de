#include <doctest.h>

#include <deque>

#include "memgov/contextualize.hpp"
#include "memgov/scorer.hpp"
#include "support.hpp"

using namespace memgov;
using testing::claim;

namespace {

WikiEntry external_entry(const ClaimList& claims, Tick at = 0) {
  WikiEntry e = testing::entry(claims, at);
  e.origin = OriginChannel::external;
  return e;
}

Snapshot commit_entries(Store& store, EventLog& log, const std::vector<WikiEntry>& rows) {
  Changeset cs;
  for (const auto& e : rows) {
    cs.blobs.push_back(claims_to_jsonl(e.claims));
    cs.entry_upserts.push_back(e);
  }
  store.commit(store.snapshot(), cs, 1, log);
  return store.snapshot();
}

ClaimList big_claims(int n) {
  ClaimList c;
  for (int i = 0; i < n; ++i)
    c.push_back(claim("doc", 1, 1.0 - 0.07 * i, "fact " + std::to_string(i)));
  return c;
}

}  // namespace

TEST_CASE("compress_to_depth keeps a strength-ranked nested chain") {
  const ClaimList full = {
      claim("a", 1, 0.9, "one"), claim("b", 1, 0.2, "two"), claim("c", 1, 0.7, "three"),
      claim("d", 1, 0.5, "four"), claim("e", 1, 0.3, "five"),
  };
  const auto d5 = compress_to_depth(full, 5);
  CHECK(d5 == full);
  const auto d3 = compress_to_depth(full, 3);  // ceil(5*3/5) = 3 strongest
  REQUIRE(d3.size() == 3);
  CHECK(d3[0].topic == "a");
  CHECK(d3[1].topic == "c");
  CHECK(d3[2].topic == "d");  // original order among the kept
  const auto d1 = compress_to_depth(full, 1);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0].topic == "a");

  // every shallower depth is a subset of the deeper one
  for (int deep = 2; deep <= 5; ++deep) {
    const auto big = compress_to_depth(full, deep);
    const auto small = compress_to_depth(full, deep - 1);
    for (const auto& c : small)
      CHECK(std::count(big.begin(), big.end(), c) == 1);
  }
}

TEST_CASE("depth inference defaults to 2 in an empty neighborhood") {
  IndexState s;
  ContextualizeParams p;
  CHECK(infer_depth(s, {claim("novel", 1, 0.9)}, {}, p) == 2);
}

TEST_CASE("depth inference scales with prominence and demand") {
  Store store;
  EventLog log;
  std::vector<WikiEntry> rows;
  for (int i = 0; i < 4; ++i)
    rows.push_back(testing::entry({claim("hot", 1, 0.5, "peer " + std::to_string(i))}));
  const auto snap = commit_entries(store, log, rows);

  ContextualizeParams p;
  const ClaimList subject = {claim("hot", 1, 0.9, "subject")};

  // every recent query hits the topic: demand 1; all peers are single-claim
  // so prominence 1 -> depth clamp(1 + 4*1*1) = 5
  std::deque<QueryRecord> hot_queries;
  for (int i = 0; i < 10; ++i) hot_queries.push_back({Tick(i), {claim("hot", 1, 0.5)}, {}});
  CHECK(infer_depth(*snap, subject, hot_queries, p) == 5);

  // nobody asks: demand 0 -> depth 1
  std::deque<QueryRecord> cold_queries;
  for (int i = 0; i < 10; ++i) cold_queries.push_back({Tick(i), {claim("other", 1, 0.5)}, {}});
  CHECK(infer_depth(*snap, subject, cold_queries, p) == 1);

  // no queries at all: neutral 0.5 demand -> depth 3
  CHECK(infer_depth(*snap, subject, {}, p) == 3);
}

TEST_CASE("first fit archives the capture then compresses the working copy") {
  Store store;
  EventLog log;
  WikiEntry doc = external_entry(big_claims(8));
  const BlobHash original_hash = doc.commit_hash;
  const auto snap = commit_entries(store, log, {doc});

  ContextualizeParams p;
  auto run = run_contextualize(snap, store, {}, {}, p, 11, log);
  CHECK(run.fitted == 1);
  CHECK(run.refitted == 0);
  REQUIRE(run.report.size() == 1);
  CHECK(run.report[0].action == "fit");
  CHECK(run.report[0].depth_before == 0);
  CHECK(run.report[0].depth_after == 3);  // no queries -> neutral demand

  REQUIRE(run.changeset.cold_upserts.size() == 1);
  const ColdObject& cold = run.changeset.cold_upserts[0];
  CHECK(cold.blob_hash == original_hash);
  CHECK(cold.origin_locator == "wiki:" + doc.id);
  REQUIRE(run.changeset.entry_upserts.size() == 1);
  const WikiEntry& fitted = run.changeset.entry_upserts[0];
  CHECK(fitted.cold_id == cold.id);
  CHECK(fitted.depth == 3);
  CHECK(fitted.claims.size() == 5);  // ceil(8*3/5)
  CHECK(fitted.commit_hash != original_hash);
  CHECK(fitted.commit_hash == content_hash(claims_to_jsonl(fitted.claims)));

  bool saw_depth_rep = false;
  for (const auto& e : log.events())
    if (e.op == ev::depth_rep && e.payload.at("entry") == doc.id) saw_depth_rep = true;
  CHECK(saw_depth_rep);

  // commit and re-run: depth unchanged, nothing to do
  store.commit(store.snapshot(), run.changeset, 11, log);
  auto again = run_contextualize(store.snapshot(), store, {}, {}, p, 21, log);
  CHECK(again.fitted == 0);
  CHECK(again.refitted == 0);
  CHECK(again.changeset.entry_upserts.empty());
}

TEST_CASE("a depth swing recalls the capture and recompresses from it") {
  Store store;
  EventLog log;
  WikiEntry doc = external_entry(big_claims(8));
  const auto snap = commit_entries(store, log, {doc});

  ContextualizeParams p;
  auto first = run_contextualize(snap, store, {}, {}, p, 11, log);
  store.commit(store.snapshot(), first.changeset, 11, log);
  const std::string first_cold = first.changeset.entry_upserts[0].cold_id;

  // demand collapses: no query touches the doc -> depth 1, delta 2
  std::deque<QueryRecord> queries;
  for (int i = 0; i < 10; ++i) queries.push_back({Tick(11 + i), {claim("elsewhere", 1, 0.5)}, {}});
  auto second = run_contextualize(store.snapshot(), store, queries, {}, p, 21, log);
  CHECK(second.refitted == 1);
  REQUIRE(second.report.size() == 1);
  CHECK(second.report[0].action == "refit");
  CHECK(second.report[0].depth_before == 3);
  CHECK(second.report[0].depth_after == 1);

  // the prior capture moved stored -> recalled, successor carries lineage
  REQUIRE(second.changeset.cold_upserts.size() == 2);
  const ColdObject* recalled = nullptr;
  const ColdObject* successor = nullptr;
  for (const auto& c : second.changeset.cold_upserts)
    (c.id == first_cold ? recalled : successor) = &c;
  REQUIRE(recalled != nullptr);
  REQUIRE(successor != nullptr);
  CHECK(recalled->state == ColdState::recalled);
  CHECK(successor->state == ColdState::recompressed);
  CHECK(successor->prior_id == first_cold);

  // the working copy shrank to the strongest fifth, cut from the capture
  const WikiEntry& refit = second.changeset.entry_upserts[0];
  CHECK(refit.depth == 1);
  CHECK(refit.claims.size() == 2);  // ceil(8/5)
  CHECK(refit.cold_id == successor->id);
  store.commit(store.snapshot(), second.changeset, 21, log);
  CHECK(store.snapshot()->find_cold(first_cold)->state == ColdState::recalled);

  // a later surge re-infers from the original capture via the lineage chain
  std::deque<QueryRecord> surge;
  for (int i = 0; i < 10; ++i) surge.push_back({Tick(21 + i), {claim("doc", 1, 0.5)}, {}});
  auto third = run_contextualize(store.snapshot(), store, surge, {}, p, 31, log);
  CHECK(third.refitted == 1);
  REQUIRE(third.changeset.entry_upserts.size() == 1);
  CHECK(third.changeset.entry_upserts[0].depth == 5);
  CHECK(third.changeset.entry_upserts[0].claims.size() == 8);
}

TEST_CASE("access deltas fold into the rows before any refit math") {
  Store store;
  EventLog log;
  WikiEntry plain = testing::entry({claim("t", 1, 0.9)}, 0);
  const auto snap = commit_entries(store, log, {plain});

  std::map<EntryId, AccessDelta> access;
  access[plain.id].count = 3;
  access[plain.id].last = 17;
  access[plain.id].utility.push_back({17, 0.5});

  ContextualizeParams p;
  auto run = run_contextualize(snap, store, {}, access, p, 20, log);
  REQUIRE(run.changeset.entry_upserts.size() == 1);
  const WikiEntry& updated = run.changeset.entry_upserts[0];
  CHECK(updated.access_count == 3);
  CHECK(updated.last_accessed == 17);
  REQUIRE(updated.utility_trace.size() == 1);
  CHECK(updated.utility_trace[0].outcome == 0.5);
  // conversation-origin rows get no depth treatment
  CHECK(updated.depth == 0);
  CHECK(run.fitted == 0);
}

TEST_CASE("a compressed external row without its capture is an error") {
  Store store;
  EventLog log;
  WikiEntry doc = external_entry(big_claims(4));
  doc.depth = 3;  // claims someone fitted it, but there is no cold object
  const auto snap = commit_entries(store, log, {doc});
  ContextualizeParams p;
  std::deque<QueryRecord> queries;
  for (int i = 0; i < 10; ++i) queries.push_back({Tick(i), {claim("doc", 1, 0.5)}, {}});
  CHECK_THROWS_AS(run_contextualize(snap, store, queries, {}, p, 30, log), MissingColdObject);
}
