#include "memgov/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memgov/hash.hpp"
#include "memgov/scorer.hpp"

namespace memgov {

namespace {

std::string topic_name(int i) { return "t" + std::to_string(i); }

int topic_index(const std::string& topic) {
  if (topic.size() < 2 || topic[0] != 't') return -1;
  for (std::size_t i = 1; i < topic.size(); ++i) {
    if (topic[i] < '0' || topic[i] > '9') return -1;
  }
  return std::stoi(topic.substr(1));
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

OriginChannel channel_for(int n) {
  switch (n % 3) {
    case 0: return OriginChannel::conversation;
    case 1: return OriginChannel::document;
    default: return OriginChannel::external;
  }
}

}  // namespace

std::size_t SimRng::pick(const std::vector<double>& weights) {
  if (weights.empty()) return 0;
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return index(weights.size());
  const double x = unit() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (x < acc) return i;
  }
  return weights.size() - 1;
}

DriftConfig drift_config_from(const Config& cfg) {
  DriftConfig c;
  c.seed = static_cast<std::uint64_t>(cfg.get("sim.seed", static_cast<long long>(c.seed)));
  c.cycles = cfg.get("sim.cycles", c.cycles);
  c.entries_per_cycle = cfg.get("sim.entries_per_cycle", c.entries_per_cycle);
  c.queries_per_cycle = cfg.get("sim.queries_per_cycle", c.queries_per_cycle);
  c.topic_count = cfg.get("sim.topic_count", c.topic_count);
  c.foundation_count = cfg.get("sim.foundation_count", c.foundation_count);
  c.drift_rate = cfg.get("sim.drift_rate", c.drift_rate);
  c.inject_minority = cfg.get("sim.inject_minority", c.inject_minority);
  c.minority_cycle = cfg.get("sim.minority_cycle", c.minority_cycle);
  c.minority_every = cfg.get("sim.minority_every", c.minority_every);
  c.minority_size = cfg.get("sim.minority_size", c.minority_size);
  c.promotion_enabled = cfg.get("sim.promotion_enabled", c.promotion_enabled);
  c.gravity_protection = cfg.get("sim.gravity_protection", c.gravity_protection);
  if (cfg.has("sim.capacity")) {
    c.capacity = static_cast<std::size_t>(cfg.get("sim.capacity", 0LL));
  }
  c.audit_cadence = cfg.get("sim.audit_cadence", c.audit_cadence);
  c.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", c.ticks_per_cycle);
  return c;
}

Schedule make_schedule(const DriftConfig& cfg) {
  Schedule s;
  SimRng rng(cfg.seed);
  const int T = std::max(1, cfg.topic_count);
  const int F = std::clamp(cfg.foundation_count, 0, T);
  const int cycles = std::max(0, cfg.cycles);

  // Preference mass starts concentrated on the low topics and, with a
  // positive drift rate, rotates away from them one step per cycle.
  std::vector<double> v(static_cast<std::size_t>(T));
  double norm = 0.0;
  for (int i = 0; i < T; ++i) {
    v[static_cast<std::size_t>(i)] = std::pow(0.65, i);
    norm += v[static_cast<std::size_t>(i)];
  }
  for (auto& x : v) x /= norm;
  s.pref.reserve(static_cast<std::size_t>(cycles));
  for (int c = 0; c < cycles; ++c) {
    s.pref.push_back(v);
    std::vector<double> nv(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      nv[static_cast<std::size_t>(i)] =
          (1.0 - cfg.drift_rate) * v[static_cast<std::size_t>(i)] +
          cfg.drift_rate * v[static_cast<std::size_t>((i - 1 + T) % T)];
    }
    v = std::move(nv);
  }

  s.cycles.resize(static_cast<std::size_t>(cycles));
  if (cycles == 0) return s;

  const int pc = std::clamp(cfg.minority_cycle, 0, cycles - 1);
  s.contested_topic = topic_name(argmax(s.pref[static_cast<std::size_t>(pc)]));

  // Charter entries: one strong single-claim anchor per early topic. They
  // arrive first, integrate into an empty wiki, and later captures on the
  // same topics hang dependency edges off them.
  for (int k = 0; k < F; ++k) {
    ClaimList claims{{topic_name(k), 1, 1.0, "charter for " + topic_name(k)}};
    s.cycles[0].arrivals.emplace_back(claims_to_jsonl(claims), OriginChannel::conversation);
    s.foundation_ids.push_back(content_hash(claims_to_jsonl(canonical_claims(claims))));
  }

  for (int c = 0; c < cycles; ++c) {
    auto& script = s.cycles[static_cast<std::size_t>(c)];
    const auto& pv = s.pref[static_cast<std::size_t>(c)];

    for (int j = 0; j < cfg.entries_per_cycle; ++j) {
      const int main = static_cast<int>(rng.pick(pv));
      const std::string tag = std::to_string(c) + "-" + std::to_string(j);
      ClaimList claims{{topic_name(main), 1, 0.75 + 0.2 * rng.unit(), "obs " + tag}};
      claims.push_back({"x" + tag, 1, 0.15, "handle " + tag});
      if (rng.unit() < 0.4) {
        int second = static_cast<int>(rng.pick(pv));
        if (second == main) second = (main + 1) % T;
        claims.push_back({topic_name(second), 1, 0.45 + 0.15 * rng.unit(), "obs2 " + tag});
      }
      script.arrivals.emplace_back(claims_to_jsonl(claims), channel_for(c + j));
    }

    const bool inject =
        cfg.inject_minority &&
        (c == pc || (cfg.minority_every > 0 && c > pc && (c - pc) % cfg.minority_every == 0));
    if (inject) {
      // A revision bundle: mutually supporting captures that oppose the
      // currently dominant topic's polarity and bring their own frame.
      const std::string tc = topic_name(argmax(pv));
      const std::string frame = "m" + std::to_string(c);
      for (int j = 0; j < cfg.minority_size; ++j) {
        ClaimList claims{
            {tc, -1, 0.9, "revision " + std::to_string(c) + "-" + std::to_string(j)},
            {frame + "-core", 1, 0.8, "frame " + frame},
            {frame + "-s" + std::to_string(j), 1, 0.25, "satellite " + std::to_string(j)},
        };
        script.arrivals.emplace_back(claims_to_jsonl(claims), channel_for(j));
      }
    }

    if (F > 0) {
      script.queries.push_back({{topic_name(c % F), 1, 1.0, "charter consult"}});
    }
    for (int q = 0; q < cfg.queries_per_cycle; ++q) {
      const int tq = static_cast<int>(rng.pick(pv));
      script.queries.push_back({{topic_name(tq), 1, 1.0, "drift query"}});
    }
  }

  const std::string frame0 = "m" + std::to_string(pc);
  s.probes = {
      {{s.contested_topic, 1, 1.0, "probe"}},
      {{s.contested_topic, -1, 1.0, "probe"}},
      {{frame0 + "-core", 1, 1.0, "probe"}},
  };
  return s;
}

double utility_outcome(const ClaimList& claims, const std::vector<double>& pref) {
  if (claims.empty() || pref.empty()) return 0.0;
  const double T = static_cast<double>(pref.size());
  double wsum = 0.0;
  double ssum = 0.0;
  for (const auto& cl : claims) {
    double w = 1.0 / T;  // off-vocabulary topics are neutral
    const int i = topic_index(cl.topic);
    if (i >= 0 && i < static_cast<int>(pref.size())) w = pref[static_cast<std::size_t>(i)];
    wsum += w * cl.strength;
    ssum += cl.strength;
  }
  if (ssum <= 0.0) return 0.0;
  return std::clamp(T * (wsum / ssum) - 1.0, -1.0, 1.0);
}

double active_topic_entropy(const IndexState& s) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& [id, e] : s.entries) {
    if (e.state != WikiState::active) continue;
    for (const auto& cl : e.claims) counts[cl.topic] += 1;
  }
  if (counts.empty()) return 0.0;
  return entropy_bits(counts);
}

DriftResult run_drift(const DriftConfig& cfg) {
  const Schedule sched = make_schedule(cfg);

  EngineParams p;
  p.consolidate.promotion_enabled = cfg.promotion_enabled;
  p.decay.respect_protection = cfg.gravity_protection;
  p.audit.cadence_cycles = cfg.audit_cadence;
  p.ticks_per_cycle = cfg.ticks_per_cycle;
  p.decay.ticks_per_cycle = cfg.ticks_per_cycle;
  p.gravity.ticks_per_cycle = cfg.ticks_per_cycle;
  p.scheduler.ticks_per_cycle = cfg.ticks_per_cycle;
  p.triage.ticks_per_cycle = cfg.ticks_per_cycle;

  Engine eng("", p);
  if (cfg.capacity) eng.store().set_capacity(cfg.capacity);

  DriftResult r;
  r.config = cfg;

  for (int c = 0; c < static_cast<int>(sched.cycles.size()); ++c) {
    const auto& script = sched.cycles[static_cast<std::size_t>(c)];
    for (const auto& [raw, ch] : script.arrivals) eng.ingest(raw, ch);
    for (const auto& q : script.queries) {
      const auto res = eng.query(q, 3);
      const auto snap = eng.snapshot();
      for (const auto& hit : res.results) {
        const WikiEntry* e = snap->find_entry(hit.id);
        if (e != nullptr) {
          eng.record_utility(hit.id, utility_outcome(e->claims, sched.pref[static_cast<std::size_t>(c)]));
        }
      }
    }
    try {
      const auto rep = eng.run_cycle();
      r.integrated += static_cast<int>(rep.integrated.size());
      r.promoted += static_cast<int>(rep.promoted.size());
      r.compressed_events += rep.decay_compressed;
      r.archived += rep.decay_archived;
      r.storage_skips += rep.storage_skips;
    } catch (const Error&) {
      r.aborted_windows += 1;
    }
    r.cycles_run += 1;
    const Tick target = static_cast<Tick>(std::llround((c + 1) * cfg.ticks_per_cycle));
    const Tick now = eng.now();
    if (now < target) eng.advance(target - now);
  }

  const auto snap = eng.snapshot();
  r.active_entropy = active_topic_entropy(*snap);

  const auto live = [&](const EntryId& id) {
    const WikiEntry* e = snap->find_entry(id);
    return e != nullptr && (e->state == WikiState::active || e->state == WikiState::decaying);
  };
  std::set<EntryId> orphan_ids;
  for (const auto& ed : snap->edges) {
    if (!ed.dangling_to_tombstone || !live(ed.src)) continue;
    r.broken_refs += 1;
    orphan_ids.insert(ed.src);
  }
  r.orphans = static_cast<int>(orphan_ids.size());

  const auto grav = compute_gravity(*snap, p.gravity, eng.now());
  for (const auto& [id, e] : snap->entries) {
    bool prot = false;
    const auto it = grav.scores.find(id);
    if (it != grav.scores.end()) prot = it->second.protected_;
    if (e.state == WikiState::archived || !prot) {
      r.unprotected_total += 1;
      if (e.summarization_distortion > 0.0) r.unprotected_compressed += 1;
    }
  }

  for (const auto& fid : sched.foundation_ids) {
    const WikiEntry* e = snap->find_entry(fid);
    r.foundation_hash[fid] = e != nullptr ? e->commit_hash : "";
    r.foundation_state[fid] = e != nullptr ? to_string(e->state) : "missing";
  }

  for (const auto& probe : sched.probes) {
    const auto res = eng.query(probe, 3);
    std::vector<EntryId> ids;
    ids.reserve(res.results.size());
    for (const auto& se : res.results) ids.push_back(se.id);
    r.probe_results.push_back(std::move(ids));
  }
  return r;
}

int probe_divergence(const DriftResult& a, const DriftResult& b) {
  int d = 0;
  const std::size_t n = std::max(a.probe_results.size(), b.probe_results.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::set<EntryId> sa;
    std::set<EntryId> sb;
    if (i < a.probe_results.size()) {
      sa.insert(a.probe_results[i].begin(), a.probe_results[i].end());
    }
    if (i < b.probe_results.size()) {
      sb.insert(b.probe_results[i].begin(), b.probe_results[i].end());
    }
    if (sa != sb) d += 1;
  }
  return d;
}

nlohmann::json DriftResult::to_json() const {
  nlohmann::json cfg{
      {"seed", config.seed},
      {"cycles", config.cycles},
      {"entries_per_cycle", config.entries_per_cycle},
      {"queries_per_cycle", config.queries_per_cycle},
      {"topic_count", config.topic_count},
      {"foundation_count", config.foundation_count},
      {"drift_rate", config.drift_rate},
      {"inject_minority", config.inject_minority},
      {"minority_cycle", config.minority_cycle},
      {"minority_every", config.minority_every},
      {"minority_size", config.minority_size},
      {"promotion_enabled", config.promotion_enabled},
      {"gravity_protection", config.gravity_protection},
      {"audit_cadence", config.audit_cadence},
      {"ticks_per_cycle", config.ticks_per_cycle},
  };
  if (config.capacity) cfg["capacity"] = *config.capacity;

  int unchanged = 0;
  for (const auto& [fid, hash] : foundation_hash) {
    if (hash == fid) unchanged += 1;
  }
  return nlohmann::json{
      {"config", std::move(cfg)},
      {"cycles_run", cycles_run},
      {"integrated", integrated},
      {"promoted", promoted},
      {"compressed_events", compressed_events},
      {"archived", archived},
      {"storage_skips", storage_skips},
      {"aborted_windows", aborted_windows},
      {"active_entropy", active_entropy},
      {"orphans", orphans},
      {"broken_refs", broken_refs},
      {"foundations_unchanged", unchanged},
      {"foundations_total", foundation_hash.size()},
      {"unprotected_total", unprotected_total},
      {"unprotected_compressed", unprotected_compressed},
      {"probe_results", probe_results},
  };
}

}  // namespace memgov
