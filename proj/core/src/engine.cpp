#include "memgov/engine.hpp"

#include <algorithm>
#include <utility>

namespace memgov {

namespace {

// Virtual cost of each sleep operation, in ticks. The clock is otherwise
// driven by the caller, so cycle timing stays reproducible.
constexpr Tick kContextualizeCost = 2;
constexpr Tick kConsolidateCost = 3;
constexpr Tick kDecayCost = 2;
constexpr Tick kAuditCost = 2;

constexpr std::size_t kQueryLogCap = 512;

}  // namespace

EngineParams engine_params_from(const Config& cfg) {
  EngineParams p;
  p.scorer.task_topics = cfg.get_list("scorer.task_topics");
  p.scorer.safety_topics = cfg.get_list("scorer.safety_topics");
  p.triage = triage_params_from(cfg);
  p.consolidate = consolidate_params_from(cfg);
  p.contextualize = contextualize_params_from(cfg);
  p.decay = decay_params_from(cfg);
  p.audit = audit_params_from(cfg);
  p.gravity = gravity_params_from(cfg);
  p.scheduler = scheduler_params_from(cfg);
  p.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", 10.0);
  return p;
}

Engine::Engine(std::string store_root, EngineParams params)
    : store_(std::move(store_root)),
      p_(std::move(params)),
      scorer_(p_.scorer),
      sched_(p_.scheduler) {
  // Resume where the persisted state left off: fresh events must number
  // past anything already durable, and the clock never runs backwards.
  log_.set_next_seq(store_.event_hwm() + 1);
  clock_ = store_.snapshot()->committed_at;
}

Tick Engine::now() const {
  std::lock_guard<std::mutex> lk(mu_);
  return clock_;
}

void Engine::advance(Tick dt) {
  std::lock_guard<std::mutex> lk(mu_);
  clock_ += dt;
}

int Engine::cycles_completed() const {
  std::lock_guard<std::mutex> lk(mu_);
  return cycle_;
}

Tick Engine::tick(Tick cost) {
  std::lock_guard<std::mutex> lk(mu_);
  clock_ += cost;
  return clock_;
}

void Engine::set_mid_cycle_hook(std::function<void()> fn) {
  std::lock_guard<std::mutex> lk(mu_);
  mid_hook_ = std::move(fn);
}

TriageResult Engine::ingest(const std::string& raw, OriginChannel channel) {
  std::lock_guard<std::mutex> lk(mu_);
  const Tick t = clock_;
  log_.emit(t, ev::ingest_start, {{"channel", to_string(channel)}});

  auto snap = store_.snapshot();
  std::map<EntryId, BufferEntry> view = snap->buffer;
  for (const auto& [entry, bytes] : staged_) view[entry.id] = entry;

  TriageResult r = triage_ingest(view, raw, channel, t, p_.triage);
  nlohmann::json done{{"entry", r.id}, {"decision", to_string(r.decision)}};
  if (!r.reason.empty()) done["reason"] = r.reason;

  if (r.decision != TriageResult::Decision::duplicate) {
    log_.emit(t, ev::buffer_write, {{"entry", r.id}, {"state", to_string(r.entry.state)}});
    staged_.emplace_back(r.entry, r.content);
  }
  log_.emit(t, ev::ingest_end, done);

  // Between sleep operations the journal row lands in the index at once;
  // during one it stays staged until that operation's commit is in.
  if (!op_running_) flush_staged_locked();
  return r;
}

void Engine::flush_staged_locked() {
  if (staged_.empty()) return;
  Changeset cs;
  for (const auto& [entry, bytes] : staged_) {
    cs.blobs.push_back(bytes);
    cs.buffer_upserts.push_back(entry);
  }
  auto base = store_.snapshot();
  store_.commit(base, cs, clock_, log_);
  staged_.clear();
}

QueryResult Engine::query(const ClaimList& query_claims, std::size_t top_k) {
  // Served entirely from the last committed snapshot; never touches the
  // staging or writer paths, so a running sleep window cannot block it.
  auto snap = store_.snapshot();
  std::vector<std::pair<EntryId, ClaimList>> corpus;
  for (const auto& [id, e] : snap->entries) {
    if (e.state == WikiState::active || e.state == WikiState::decaying) {
      corpus.emplace_back(id, e.claims);
    }
  }
  auto results = rank(scorer_, query_claims, corpus, top_k);

  std::lock_guard<std::mutex> lk(mu_);
  QueryRecord qr;
  qr.tick = clock_;
  qr.claims = query_claims;
  for (const auto& r : results) {
    qr.accessed.push_back(r.id);
    auto& d = access_[r.id];
    d.count += 1;
    d.last = clock_;
  }
  queries_.push_back(std::move(qr));
  while (queries_.size() > kQueryLogCap) queries_.pop_front();
  log_.emit(clock_, ev::read_serve,
            {{"commit", snap.commit_id}, {"results", results.size()}});
  return QueryResult{std::move(results), snap.commit_id, clock_};
}

void Engine::record_utility(const EntryId& id, double outcome) {
  auto snap = store_.snapshot();
  if (!snap->resolves(id)) throw UnknownEntry("record_utility: unknown id " + id);
  std::lock_guard<std::mutex> lk(mu_);
  auto& d = access_[id];
  d.utility.push_back(UtilitySample{clock_, outcome});
}

WindowPlan Engine::plan_window(const HomeostasisVector& hv) {
  return sched_.plan_window(now(), hv);
}

CycleReport Engine::run_cycle() {
  std::lock_guard<std::mutex> window_lk(window_mu_);

  std::deque<QueryRecord> recent;
  std::map<EntryId, AccessDelta> access;
  Tick t0 = 0;
  int cycle = 0;
  {
    std::lock_guard<std::mutex> lk(mu_);
    op_running_ = true;
    recent = queries_;
    access = std::move(access_);
    access_ = {};
    t0 = clock_;
    cycle = cycle_;
  }

  CycleReport rep;
  rep.cycle = cycle;
  log_.emit(t0, ev::window_start, {{"cycle", cycle}});
  sched_.note_window_started(t0);

  auto flush = [&] {
    std::lock_guard<std::mutex> lk(mu_);
    flush_staged_locked();
  };
  auto finish = [&](bool aborted) {
    Tick t = 0;
    {
      std::lock_guard<std::mutex> lk(mu_);
      op_running_ = false;
      t = clock_;
    }
    flush();
    nlohmann::json payload{{"cycle", cycle}, {"commits", rep.commits.size()}};
    if (aborted) payload["aborted"] = true;
    log_.emit(t, ev::window_end, payload);
    // A closed window is durable as a whole, closing event included.
    store_.sync_events(log_);
  };

  // A full store fails one operation's commit, not the window: later
  // operations (decay above all) are what relieve the pressure.
  auto guarded = [&](auto&& body) {
    try {
      body();
    } catch (const StorageFull&) {
      rep.storage_skips += 1;
    }
    flush();
  };

  try {
    guarded([&] {
      auto snap = store_.snapshot();
      const Tick t = tick(kContextualizeCost);
      auto run = run_contextualize(snap, store_, recent, access, p_.contextualize, t, log_);
      if (!run.changeset.empty()) {
        rep.commits.push_back(store_.commit(snap, run.changeset, t, log_));
      }
    });
    guarded([&] {
      auto snap = store_.snapshot();
      std::function<void()> hook;
      {
        std::lock_guard<std::mutex> lk(mu_);
        hook = mid_hook_;
      }
      if (hook) hook();  // arrivals from here stage against the next flush
      const Tick t = tick(kConsolidateCost);
      auto run = run_consolidate(snap, scorer_, p_.consolidate, t, log_);
      rep.consolidate_report = run.report_jsonl();
      rep.promoted = run.promoted;
      rep.integrated = run.integrated;
      if (!run.changeset.empty()) {
        rep.commits.push_back(store_.commit(snap, run.changeset, t, log_));
      }
    });
    guarded([&] {
      auto snap = store_.snapshot();
      const Tick t = tick(kDecayCost);
      auto grav = compute_gravity(*snap, p_.gravity, t);
      auto run = run_decay(snap, grav, p_.decay, t, log_);
      rep.decay_compressed = run.compressed;
      rep.decay_archived = run.archived;
      if (!run.changeset.empty()) {
        rep.commits.push_back(store_.commit(snap, run.changeset, t, log_));
      }
    });
    if (p_.audit.cadence_cycles > 0 && (cycle + 1) % p_.audit.cadence_cycles == 0) {
      guarded([&] {
        auto snap = store_.snapshot();
        const Tick t = tick(kAuditCost);
        auto run = run_audit(snap, scorer_, recent, p_.audit, t, log_);
        rep.audit_report = run.report_jsonl();
        rep.audit_ran = true;
        rep.query_entropy = run.query_entropy;
        if (!run.changeset.empty()) {
          rep.commits.push_back(store_.commit(snap, run.changeset, t, log_));
        }
      });
    }

    Tick t_end = 0;
    {
      std::lock_guard<std::mutex> lk(mu_);
      cycle_ += 1;
      t_end = clock_;
    }
    sched_.observe_duration(t_end - t0);
    finish(false);
  } catch (...) {
    // Uncommitted work from the failed operation is simply gone; the head
    // still points at the last good commit and the next window retries.
    finish(true);
    throw;
  }
  return rep;
}

GravityReport Engine::gravity_report() const {
  auto snap = store_.snapshot();
  return compute_gravity(*snap, p_.gravity, now());
}

std::vector<Violation> Engine::validate() const {
  auto snap = store_.snapshot();
  return validate_state(*snap, store_);
}

}  // namespace memgov
