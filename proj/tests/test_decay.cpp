#include <doctest.h>

#include <cmath>

#include "memgov/decay.hpp"
#include "memgov/gravity.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"
#include "support.hpp"

using namespace memgov;
using testing::claim;

namespace {

struct World {
  Store store;
  EventLog log;
  GravityParams gp;
  DecayParams dp;

  WikiEntry add(Changeset& cs, const ClaimList& claims, Tick last, std::int64_t access = 0) {
    WikiEntry e = testing::entry(claims, last);
    e.access_count = access;
    cs.blobs.push_back(claims_to_jsonl(e.claims));
    cs.entry_upserts.push_back(e);
    return e;
  }

  DecayRun pass(Tick now) {
    const Snapshot snap = store.snapshot();
    const auto gravity = compute_gravity(*snap, gp, now);
    auto run = run_decay(snap, gravity, dp, now, log);
    store.commit(snap, run.changeset, now, log);
    return run;
  }
};

const DecayAction* action_for(const DecayRun& run, const EntryId& id) {
  for (const auto& a : run.report)
    if (a.entry == id) return &a;
  return nullptr;
}

}  // namespace

TEST_CASE("utility ewma folds oldest first") {
  CHECK(utility_ewma({}, 0.3) == 0.0);
  CHECK(utility_ewma({{0, 0.8}}, 0.3) == doctest::Approx(0.8));
  // [a, b] -> 0.3*b + 0.7*a
  CHECK(utility_ewma({{0, 1.0}, {1, -1.0}}, 0.3) == doctest::Approx(0.3 * -1.0 + 0.7 * 1.0));
  CHECK(utility_ewma({{0, 1.0}, {1, -1.0}, {2, 0.0}}, 0.3) == doctest::Approx(0.7 * 0.4));
}

TEST_CASE("vitality hand values") {
  DecayParams p;

  WikiEntry fresh;
  fresh.last_accessed = 100;
  fresh.access_count = 4;
  fresh.utility_trace = {{90, 1.0}};
  // 0.3*1 + 0.05*4 + 0.4*1 + 0.6*0.5 - 0
  CHECK(vitality(fresh, 0.5, p, 100) == doctest::Approx(1.2));

  WikiEntry worn;
  worn.last_accessed = 80;  // two cycles ago at now=100
  worn.access_count = 10;
  worn.utility_trace = {{50, 1.0}, {60, -1.0}};  // ewma 0.4
  worn.summarization_distortion = 0.2;
  // 0.3*0.5 + 0.05*10 + 0.4*0.4 + 0.6*0.25 - 0.3*0.2
  CHECK(vitality(worn, 0.25, p, 100) == doctest::Approx(0.90));

  // sub-cycle gaps never inflate recency past one day
  WikiEntry instant;
  instant.last_accessed = 100;
  CHECK(vitality(instant, 0.0, p, 100) == doctest::Approx(0.3));
  CHECK(vitality(instant, 0.0, p, 103) == doctest::Approx(0.3));
}

TEST_CASE("compress_claims keeps the strongest half, order preserved") {
  const ClaimList four = {claim("a", 1, 0.9), claim("b", 1, 0.2), claim("c", 1, 0.7),
                          claim("d", 1, 0.5)};
  const auto kept = compress_claims(four);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].topic == "a");
  CHECK(kept[1].topic == "c");

  const ClaimList three = {claim("a", 1, 0.1), claim("b", 1, 0.9), claim("c", 1, 0.5)};
  const auto two = compress_claims(three);  // ceil(3/2) = 2
  REQUIRE(two.size() == 2);
  CHECK(two[0].topic == "b");
  CHECK(two[1].topic == "c");

  CHECK_THROWS_AS(compress_claims({claim("only", 1, 0.5)}), AlreadyMinimal);
  CHECK_THROWS_AS(compress_claims({}), AlreadyMinimal);
}

TEST_CASE("decay walks the ladder: compress, compress, slip, archive") {
  World w;
  Changeset cs;
  const WikiEntry victim = w.add(cs,
                                 {claim("old", 1, 0.9, "v1"), claim("old", 1, 0.7, "v2"),
                                  claim("old", 1, 0.5, "v3"), claim("old", 1, 0.3, "v4")},
                                 /*last=*/0);
  // a dependency pair keeps the floor above the victim's base
  const WikiEntry leaf = w.add(cs, {claim("live", 1, 0.8)}, /*last=*/600, /*access=*/8);
  const WikiEntry hub = w.add(cs, {claim("core", 1, 0.9)}, /*last=*/600, /*access=*/8);
  cs.edge_upserts.push_back({leaf.id, hub.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  // pass 1: 4 claims -> 2, original archived to cold first
  auto first = w.pass(600);
  CHECK(first.compressed == 1);
  CHECK(first.transitioned == 0);
  CHECK(first.archived == 0);
  REQUIRE(action_for(first, victim.id) != nullptr);
  CHECK(action_for(first, victim.id)->action == "compress");
  CHECK(action_for(first, hub.id)->action == "none");
  {
    const auto snap = w.store.snapshot();
    const WikiEntry* v = snap->find_entry(victim.id);
    CHECK(v->claims.size() == 2);
    CHECK(v->summarization_distortion == doctest::Approx(0.1));
    CHECK(v->state == WikiState::active);
    CHECK(v->commit_hash != victim.commit_hash);
    REQUIRE_FALSE(v->cold_id.empty());
    const ColdObject* capture = snap->find_cold(v->cold_id);
    REQUIRE(capture != nullptr);
    CHECK(capture->blob_hash == victim.commit_hash);  // the original bytes
    CHECK(w.store.get_blob(capture->blob_hash) == claims_to_jsonl(victim.claims));
  }

  // pass 2: 2 claims -> 1, lineage chains through the cold store
  auto second = w.pass(610);
  CHECK(second.compressed == 1);
  {
    const auto snap = w.store.snapshot();
    const WikiEntry* v = snap->find_entry(victim.id);
    CHECK(v->claims.size() == 1);
    CHECK(v->claims[0] == claim("old", 1, 0.9, "v1"));
    CHECK(v->summarization_distortion == doctest::Approx(0.2));
    const ColdObject* mid = snap->find_cold(v->cold_id);
    REQUIRE(mid != nullptr);
    CHECK(mid->prior_id == cold_id_for(victim.commit_hash));
  }

  // pass 3: single claim, still active -> slips to decaying
  auto third = w.pass(620);
  CHECK(third.compressed == 0);
  CHECK(third.transitioned == 1);
  CHECK(w.store.snapshot()->find_entry(victim.id)->state == WikiState::decaying);

  // pass 4: single claim, decaying -> archived behind a tombstone
  auto fourth = w.pass(630);
  CHECK(fourth.archived == 1);
  const auto snap = w.store.snapshot();
  const WikiEntry* v = snap->find_entry(victim.id);
  CHECK(v->state == WikiState::archived);
  REQUIRE_FALSE(v->cold_id.empty());
  CHECK(snap->find_cold(v->cold_id) != nullptr);
  CHECK(snap->resolves(victim.id));

  bool saw_tombstone_event = false;
  for (const auto& e : w.log.events())
    if (e.op == ev::tombstone && e.payload.at("entry") == victim.id) saw_tombstone_event = true;
  CHECK(saw_tombstone_event);

  // the record of every step survives: full capture, then each rung down
  CHECK(w.store.get_blob(snap->find_cold(v->cold_id)->blob_hash).has_value());
  CHECK(validate_state(*snap, w.store).empty());
}

TEST_CASE("the gravity floor vetoes decay however stale the entry is") {
  World w;
  Changeset cs;
  // anchor: three dependents make it the structural core
  const WikiEntry anchor = w.add(cs, {claim("core", 1, 0.9)}, /*last=*/0);
  std::vector<WikiEntry> leaves;
  for (int i = 0; i < 3; ++i)
    leaves.push_back(
        w.add(cs, {claim("leaf" + std::to_string(i), 1, 0.8)}, /*last=*/900, /*access=*/8));
  for (const auto& l : leaves)
    cs.edge_upserts.push_back({l.id, anchor.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  const auto gravity = compute_gravity(*w.store.snapshot(), w.gp, 900);
  REQUIRE(gravity.scores.at(anchor.id).protected_);
  // untouched for 90 cycles: vitality far under threshold
  auto run = run_decay(w.store.snapshot(), gravity, w.dp, 900, w.log);
  const auto* a = action_for(run, anchor.id);
  REQUIRE(a != nullptr);
  CHECK(a->vitality < w.dp.threshold);
  CHECK_FALSE(a->eligible);
  CHECK(a->action == "none");
  CHECK(run.compressed + run.transitioned + run.archived == 0);
}

TEST_CASE("dropping the protection veto exposes the anchor") {
  World w;
  w.dp.respect_protection = false;
  Changeset cs;
  const WikiEntry anchor = w.add(cs, {claim("core", 1, 0.9), claim("core", 1, 0.5, "extra")},
                                 /*last=*/0);
  std::vector<WikiEntry> leaves;
  for (int i = 0; i < 3; ++i)
    leaves.push_back(
        w.add(cs, {claim("leaf" + std::to_string(i), 1, 0.8)}, /*last=*/900, /*access=*/8));
  for (const auto& l : leaves)
    cs.edge_upserts.push_back({l.id, anchor.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  auto run = w.pass(900);
  const auto* a = action_for(run, anchor.id);
  REQUIRE(a != nullptr);
  CHECK(a->eligible);
  CHECK(a->action == "compress");
}

TEST_CASE("the action budget caps one pass") {
  World w;
  w.dp.max_actions = 2;
  Changeset cs;
  std::vector<WikiEntry> stale;
  for (int i = 0; i < 5; ++i)
    stale.push_back(w.add(cs, {claim("s" + std::to_string(i), 1, 0.9),
                               claim("s" + std::to_string(i), 1, 0.4, "b")},
                          /*last=*/0));
  // one protected core so the floor sits above the stale rows
  const WikiEntry hub = w.add(cs, {claim("core", 1, 0.9)}, /*last=*/900, /*access=*/9);
  const WikiEntry leaf = w.add(cs, {claim("live", 1, 0.8)}, /*last=*/900, /*access=*/9);
  cs.edge_upserts.push_back({leaf.id, hub.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  auto run = w.pass(900);
  CHECK(run.compressed == 2);
  int eligible = 0;
  for (const auto& a : run.report)
    if (a.eligible) ++eligible;
  CHECK(eligible == 5);  // all qualify; only two acted on
}

TEST_CASE("decay run refreshes gravity and vitality on every live row") {
  World w;
  Changeset cs;
  const WikiEntry a = w.add(cs, {claim("a", 1, 0.9)}, /*last=*/100, /*access=*/8);
  const WikiEntry b = w.add(cs, {claim("b", 1, 0.9)}, /*last=*/100, /*access=*/8);
  cs.edge_upserts.push_back({a.id, b.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  w.pass(100);
  const auto snap = w.store.snapshot();
  const WikiEntry* ra = snap->find_entry(a.id);
  const WikiEntry* rb = snap->find_entry(b.id);
  CHECK(ra->gravity_base > 0.0);
  CHECK(rb->gravity_base > ra->gravity_base);  // b carries the dependency
  CHECK(rb->gravity_protected);
  CHECK(ra->vitality == doctest::Approx(0.3 + 0.05 * 8 + 0.6 * ra->gravity_eff));
  CHECK(rb->vitality > w.dp.threshold);
}

TEST_CASE("decay events carry the floor and the outcome counts") {
  World w;
  Changeset cs;
  w.add(cs, {claim("x", 1, 0.9), claim("x", 1, 0.4, "b")}, /*last=*/0);
  const WikiEntry hub = w.add(cs, {claim("core", 1, 0.9)}, /*last=*/600, /*access=*/9);
  const WikiEntry leaf = w.add(cs, {claim("live", 1, 0.8)}, /*last=*/600, /*access=*/9);
  cs.edge_upserts.push_back({leaf.id, hub.id, EdgeKind::dependency, 1.0, false});
  w.store.commit(w.store.snapshot(), cs, 1, w.log);

  const auto gravity = compute_gravity(*w.store.snapshot(), w.gp, 600);
  auto run = run_decay(w.store.snapshot(), gravity, w.dp, 600, w.log);
  (void)run;
  const auto events = w.log.events();
  const TraceEvent* start = nullptr;
  const TraceEvent* compress = nullptr;
  const TraceEvent* end = nullptr;
  for (const auto& e : events) {
    if (e.op == ev::decay_start) start = &e;
    if (e.op == ev::compress) compress = &e;
    if (e.op == ev::decay_end) end = &e;
  }
  REQUIRE(start != nullptr);
  CHECK(start->payload.at("floor") == doctest::Approx(gravity.floor));
  CHECK(start->payload.at("snapshot") == w.store.snapshot().commit_id);
  REQUIRE(compress != nullptr);
  CHECK(compress->payload.at("claims_before") == 2);
  CHECK(compress->payload.at("claims_after") == 1);
  CHECK(compress->payload.at("base").get<double>() < gravity.floor);
  REQUIRE(end != nullptr);
  CHECK(end->payload.at("compressed") == 1);
  CHECK(end->payload.at("transitioned") == 0);
  CHECK(end->payload.at("archived") == 0);
}
