#include <doctest.h>

#include <algorithm>
#include <deque>

#include "memgov/audit.hpp"
#include "memgov/decay.hpp"
#include "memgov/events.hpp"
#include "memgov/model.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"
#include "support.hpp"

using namespace memgov;

namespace {

Changeset seed_changeset(const std::vector<WikiEntry>& entries) {
  Changeset cs;
  for (const auto& e : entries) {
    cs.blobs.push_back(claims_to_jsonl(e.claims));
    cs.entry_upserts.push_back(e);
  }
  return cs;
}

QueryRecord accessing(Tick tick, const ClaimList& claims, std::vector<EntryId> ids) {
  QueryRecord q;
  q.tick = tick;
  q.claims = claims;
  q.accessed = std::move(ids);
  return q;
}

const AuditReportLine& line_for(const AuditRun& run, const EntryId& id) {
  auto it = std::find_if(run.report.begin(), run.report.end(),
                         [&id](const AuditReportLine& l) { return l.entry == id; });
  REQUIRE(it != run.report.end());
  return *it;
}

}  // namespace

TEST_CASE("suspension test: no accessing queries means untested, unchanged") {
  IndexState s;
  WikiEntry t = testing::entry({testing::claim("t", 1, 1.0)});
  s.entries[t.id] = t;

  ClaimScorer scorer;
  std::deque<QueryRecord> queries;
  queries.push_back(accessing(5, {testing::claim("t", 1, 1.0)}, {}));  // served elsewhere

  const SuspensionOutcome out = suspension_test(s, scorer, t.id, queries, AuditParams{});
  CHECK(out.untested);
  CHECK(out.result == SuspensionResult::unchanged);
  CHECK(out.delta == 0.0);
  CHECK(out.queries_replayed == 0);
}

TEST_CASE("suspension test: sole source for its topic degrades without it") {
  IndexState s;
  WikiEntry t = testing::entry({testing::claim("t", 1, 1.0)});
  WikiEntry o = testing::entry({testing::claim("o", 1, 1.0)});
  s.entries[t.id] = t;
  s.entries[o.id] = o;

  ClaimScorer scorer;
  std::deque<QueryRecord> queries;
  queries.push_back(accessing(5, {testing::claim("t", 1, 1.0)}, {t.id}));

  const SuspensionOutcome out = suspension_test(s, scorer, t.id, queries, AuditParams{});
  CHECK_FALSE(out.untested);
  CHECK(out.queries_replayed == 1);
  CHECK(out.delta == doctest::Approx(1.0));  // best answer 1.0 with, 0.0 without
  CHECK(out.result == SuspensionResult::degraded);
}

TEST_CASE("suspension test: a twin entry makes removal invisible") {
  IndexState s;
  WikiEntry a = testing::entry({testing::claim("x", 1, 0.8)});
  WikiEntry twin = testing::entry({testing::claim("x", 1, 0.8, "same key, other words")});
  REQUIRE(a.id != twin.id);
  s.entries[a.id] = a;
  s.entries[twin.id] = twin;

  ClaimScorer scorer;
  std::deque<QueryRecord> queries;
  queries.push_back(accessing(5, {testing::claim("x", 1, 0.8)}, {a.id}));

  const SuspensionOutcome out = suspension_test(s, scorer, a.id, queries, AuditParams{});
  CHECK(out.delta == 0.0);
  CHECK(out.result == SuspensionResult::unchanged);
}

TEST_CASE("suspension test: pure interference improves answers when removed") {
  IndexState s;
  WikiEntry good = testing::entry({testing::claim("g", 1, 0.9)});
  WikiEntry noise = testing::entry({testing::claim("g", -1, 0.9)});
  s.entries[good.id] = good;
  s.entries[noise.id] = noise;

  ClaimScorer scorer;
  std::deque<QueryRecord> queries;
  queries.push_back(accessing(5, {testing::claim("g", 1, 0.9)}, {noise.id}));

  const SuspensionOutcome out = suspension_test(s, scorer, noise.id, queries, AuditParams{});
  // With the contradictor in place the best answer is 1.0 - 0.9; without it, 1.0.
  CHECK(out.delta == doctest::Approx(-0.9));
  CHECK(out.result == SuspensionResult::improved);
}

TEST_CASE("suspension test replays at most query_sample records, newest first") {
  IndexState s;
  WikiEntry t = testing::entry({testing::claim("t", 1, 1.0)});
  s.entries[t.id] = t;

  ClaimScorer scorer;
  std::deque<QueryRecord> queries;
  for (Tick i = 0; i < 25; ++i)
    queries.push_back(accessing(i, {testing::claim("t", 1, 1.0)}, {t.id}));

  AuditParams p;
  const SuspensionOutcome out = suspension_test(s, scorer, t.id, queries, p);
  CHECK(out.queries_replayed == p.query_sample);
}

TEST_CASE("audit run lands each verdict on its outcome") {
  testing::TempDir dir;
  Store store(dir.path);
  EventLog log;

  WikiEntry sole = testing::entry({testing::claim("t", 1, 1.0)});
  WikiEntry surveyed = testing::entry({testing::claim("x", 1, 0.8)});
  WikiEntry twin = testing::entry({testing::claim("x", 1, 0.8, "same key, other words")});
  WikiEntry good = testing::entry({testing::claim("g", 1, 0.9)});
  WikiEntry noise = testing::entry({testing::claim("g", -1, 0.9)});
  sole.gravity_base = 0.9;
  surveyed.gravity_base = 0.8;
  noise.gravity_base = 0.7;
  twin.gravity_base = 0.2;
  good.gravity_base = 0.1;
  store.commit(store.snapshot(), seed_changeset({sole, surveyed, twin, good, noise}), 10, log);

  std::deque<QueryRecord> queries;
  queries.push_back(accessing(11, {testing::claim("t", 1, 1.0)}, {sole.id}));
  queries.push_back(accessing(12, {testing::claim("x", 1, 0.8)}, {surveyed.id}));
  queries.push_back(accessing(13, {testing::claim("g", 1, 0.9)}, {noise.id}));

  ClaimScorer scorer;
  const Snapshot snap = store.snapshot();
  AuditRun run = run_audit(snap, scorer, queries, AuditParams{}, 50, log);

  REQUIRE(run.report.size() == 5);  // top_n default covers the whole wiki here
  CHECK(line_for(run, sole.id).verdict == SuspensionResult::degraded);
  CHECK(line_for(run, sole.id).outcome == AuditOutcome::restored);
  CHECK(line_for(run, surveyed.id).verdict == SuspensionResult::unchanged);
  CHECK(line_for(run, surveyed.id).outcome == AuditOutcome::gravity_reduced);
  CHECK(line_for(run, noise.id).verdict == SuspensionResult::improved);
  CHECK(line_for(run, noise.id).outcome == AuditOutcome::archived);
  CHECK(line_for(run, good.id).untested);
  CHECK(line_for(run, twin.id).untested);

  // Candidate order is gravity first, so record ids follow the sort.
  REQUIRE(run.changeset.audit_appends.size() == 5);
  CHECK(run.changeset.audit_appends[0].id == 1);
  CHECK(run.changeset.audit_appends[0].entry_id == sole.id);
  CHECK(run.changeset.audit_appends[1].entry_id == surveyed.id);
  CHECK(run.changeset.audit_appends[2].entry_id == noise.id);
  CHECK(run.changeset.audit_appends[4].id == 5);

  store.commit(snap, run.changeset, 50, log);
  const Snapshot after = store.snapshot();
  CHECK(after->find_entry(sole.id)->last_accessed == 50);  // restored = refreshed
  CHECK(after->find_entry(sole.id)->state == WikiState::active);
  CHECK(after->find_entry(surveyed.id)->audit_gravity_factor == doctest::Approx(0.5));
  CHECK(after->find_entry(noise.id)->state == WikiState::archived);
  CHECK_FALSE(after->find_entry(noise.id)->cold_id.empty());
  CHECK(after->resolves(noise.id));
  CHECK(after->audit_log.size() == 5);
  CHECK(validate_state(*after, store).empty());

  // The audit record hits the log strictly before the state change it backs.
  std::int64_t record_seq = -1, transition_seq = -1;
  for (const auto& evn : log.events()) {
    if (evn.op == ev::audit_record && evn.payload.at("entry") == noise.id) record_seq = evn.seq;
    if (evn.op == ev::transition && evn.payload.at("entity") == noise.id &&
        evn.payload.at("event") == "archive")
      transition_seq = evn.seq;
  }
  REQUIRE(record_seq >= 0);
  REQUIRE(transition_seq >= 0);
  CHECK(record_seq < transition_seq);

  // Report lines serialize sorted by entry id.
  const std::string jsonl = run.report_jsonl();
  std::vector<std::string> ids;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    const std::size_t eol = jsonl.find('\n', pos);
    ids.push_back(nlohmann::json::parse(jsonl.substr(pos, eol - pos)).at("entry"));
    pos = eol + 1;
  }
  CHECK(ids.size() == 5);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
}

TEST_CASE("audit reviews flagged entries first and caps at top_n") {
  testing::TempDir dir;
  Store store(dir.path);
  EventLog log;

  WikiEntry flagged = testing::entry({testing::claim("p", 1, 0.5)});
  WikiEntry heavy = testing::entry({testing::claim("h", 1, 0.5)});
  WikiEntry light = testing::entry({testing::claim("l", 1, 0.5)});
  flagged.audit_priority = true;
  flagged.gravity_base = 0.1;
  heavy.gravity_base = 0.9;
  light.gravity_base = 0.5;
  store.commit(store.snapshot(), seed_changeset({flagged, heavy, light}), 10, log);

  AuditParams p;
  p.top_n = 2;
  ClaimScorer scorer;
  AuditRun run = run_audit(store.snapshot(), scorer, {}, p, 20, log);

  REQUIRE(run.report.size() == 2);
  CHECK(run.report[0].entry == flagged.id);  // priority outranks raw gravity
  CHECK(run.report[1].entry == heavy.id);

  store.commit(store.snapshot(), run.changeset, 20, log);
  // The flag is consumed by the review and not re-set without a losing streak.
  CHECK_FALSE(store.snapshot()->find_entry(flagged.id)->audit_priority);
}

TEST_CASE("a passing streak on negative utility re-flags for the next review") {
  testing::TempDir dir;
  Store store(dir.path);
  EventLog log;

  WikiEntry slump = testing::entry({testing::claim("s", 1, 0.5)});
  WikiEntry fine = testing::entry({testing::claim("f", 1, 0.5)});
  slump.gravity_base = 0.9;
  fine.gravity_base = 0.8;
  slump.utility_trace.push_back({5, -1.0});
  fine.utility_trace.push_back({5, 1.0});

  Changeset seed = seed_changeset({slump, fine});
  AuditRecord prior;
  prior.id = 1;
  prior.entry_id = slump.id;
  prior.ts = 8;
  prior.suspension_result = SuspensionResult::unchanged;
  prior.outcome = AuditOutcome::gravity_reduced;
  seed.audit_appends.push_back(prior);
  AuditRecord prior2 = prior;
  prior2.id = 2;
  prior2.entry_id = fine.id;
  seed.audit_appends.push_back(prior2);
  store.commit(store.snapshot(), seed, 10, log);

  ClaimScorer scorer;
  AuditRun run = run_audit(store.snapshot(), scorer, {}, AuditParams{}, 20, log);
  REQUIRE(run.report.size() == 2);
  CHECK(line_for(run, slump.id).verdict == SuspensionResult::unchanged);

  store.commit(store.snapshot(), run.changeset, 20, log);
  const Snapshot after = store.snapshot();
  // Two passes in a row while utility runs negative: front of the next queue.
  CHECK(after->find_entry(slump.id)->audit_priority);
  // Same streak but healthy utility stays unflagged.
  CHECK_FALSE(after->find_entry(fine.id)->audit_priority);
  CHECK(after->find_entry(slump.id)->audit_gravity_factor == doctest::Approx(0.5));
}

namespace {

struct BranchWorld {
  testing::TempDir dir;
  Store store{dir.path};
  EventLog log;
  WikiEntry incumbent = testing::entry({testing::claim("inc", 1, 0.9)});
  WikiEntry outsider = testing::entry({testing::claim("u", 1, 1.0)});
  BufferEntry member;
  BranchRef ref = "br-x";

  explicit BranchWorld(std::vector<int> history) {
    incumbent.gravity_base = 0.9;
    outsider.gravity_base = 0.05;
    member.id = content_hash("member");
    member.ingested_at = 1;
    member.source_ptr = member.id;
    member.origin = OriginChannel::conversation;
    member.claims = {testing::claim("inc", -1, 0.8)};
    member.state = BufferState::pending;

    Changeset cs = seed_changeset({incumbent, outsider});
    cs.blobs.push_back("member");
    cs.buffer_upserts.push_back(member);
    MinorityBranch br;
    br.branch_ref = ref;
    br.incumbent_id = incumbent.id;
    br.member_ids = {member.id};
    br.contradiction_edge_count = 1;
    br.cycles_open = static_cast<int>(history.size());
    br.state = BranchState::open;
    br.member_count_history = std::move(history);
    cs.branch_upserts.push_back(br);
    store.commit(store.snapshot(), cs, 10, log);
  }
};

}  // namespace

TEST_CASE("stalled challenge closes once the incumbent proves out") {
  BranchWorld w({1, 1, 1});

  std::deque<QueryRecord> queries;
  queries.push_back(accessing(12, {testing::claim("inc", 1, 0.9)}, {w.incumbent.id}));

  ClaimScorer scorer;
  const Snapshot snap = w.store.snapshot();
  AuditRun run = run_audit(snap, scorer, queries, AuditParams{}, 40, w.log);

  CHECK(line_for(run, w.incumbent.id).verdict == SuspensionResult::degraded);
  REQUIRE(run.closed_branches == std::vector<BranchRef>{w.ref});
  REQUIRE(run.changeset.branch_upserts.size() == 1);
  const MinorityBranch& closed = run.changeset.branch_upserts[0];
  CHECK(closed.state == BranchState::closed);
  CHECK(closed.close_reason == "stale-challenge-incumbent-degrades-without");

  REQUIRE(run.changeset.buffer_upserts.size() == 1);
  CHECK(run.changeset.buffer_upserts[0].state == BufferState::rejected);
  CHECK(run.changeset.buffer_upserts[0].reject_reason ==
        "branch br-x closed: stale-challenge-incumbent-degrades-without");

  // The closure is announced before the branch changes state.
  std::int64_t close_seq = -1, transition_seq = -1;
  for (const auto& evn : w.log.events()) {
    if (evn.op == ev::branch_close && evn.payload.at("branch") == w.ref) close_seq = evn.seq;
    if (evn.op == ev::transition && evn.payload.at("entity") == w.ref) transition_seq = evn.seq;
  }
  REQUIRE(close_seq >= 0);
  REQUIRE(transition_seq >= 0);
  CHECK(close_seq < transition_seq);

  w.store.commit(snap, run.changeset, 40, w.log);
  const Snapshot after = w.store.snapshot();
  CHECK(after->find_branch(w.ref)->state == BranchState::closed);
  CHECK(after->find_buffer(w.member.id)->state == BufferState::rejected);
  CHECK(validate_state(*after, w.store).empty());
}

TEST_CASE("a still-growing challenge stays open") {
  BranchWorld w({1, 2, 2});

  std::deque<QueryRecord> queries;
  queries.push_back(accessing(12, {testing::claim("inc", 1, 0.9)}, {w.incumbent.id}));

  ClaimScorer scorer;
  AuditRun run = run_audit(w.store.snapshot(), scorer, queries, AuditParams{}, 40, w.log);
  CHECK(line_for(run, w.incumbent.id).verdict == SuspensionResult::degraded);
  CHECK(run.closed_branches.empty());
  CHECK(run.changeset.branch_upserts.empty());
}

TEST_CASE("a stalled challenge survives while the incumbent goes unproven") {
  BranchWorld w({1, 1, 1});

  ClaimScorer scorer;
  AuditRun run = run_audit(w.store.snapshot(), scorer, {}, AuditParams{}, 40, w.log);
  CHECK(line_for(run, w.incumbent.id).verdict == SuspensionResult::unchanged);
  CHECK(run.closed_branches.empty());
}

TEST_CASE("audit reports the topical entropy of recent queries") {
  testing::TempDir dir;
  Store store(dir.path);
  EventLog log;

  std::deque<QueryRecord> queries;
  queries.push_back(accessing(1, {testing::claim("a", 1, 1.0)}, {}));
  queries.push_back(accessing(2, {testing::claim("b", 1, 1.0)}, {}));

  ClaimScorer scorer;
  AuditRun run = run_audit(store.snapshot(), scorer, queries, AuditParams{}, 5, log);
  CHECK(run.report.empty());
  CHECK(run.query_entropy == doctest::Approx(1.0));

  const TraceEvent end = log.events().back();
  CHECK(end.op == ev::audit_end);
  CHECK(end.payload.at("audited") == 0);
  CHECK(end.payload.at("closed_branches") == 0);
  CHECK(end.payload.at("query_entropy").get<double>() == doctest::Approx(1.0));
}
