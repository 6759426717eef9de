#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memgov/conformance.hpp"
#include "memgov/engine.hpp"
#include "memgov/hash.hpp"
#include "memgov/sim.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitViolation = 2;
constexpr int kExitUsage = 64;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw memgov::Error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

memgov::OriginChannel channel_from(const std::string& s) {
  if (s == "conversation") return memgov::OriginChannel::conversation;
  if (s == "document") return memgov::OriginChannel::document;
  if (s == "external") return memgov::OriginChannel::external;
  throw memgov::Error("unknown channel: " + s);
}

// "topic", "topic:-1", "topic:1:0.7" -> one claim.
memgov::ClaimTuple claim_from(const std::string& spec) {
  memgov::ClaimTuple c;
  c.polarity = 1;
  c.strength = 1.0;
  c.text = "query";
  std::istringstream in(spec);
  std::string part;
  std::getline(in, c.topic, ':');
  if (std::getline(in, part, ':')) c.polarity = std::stoi(part);
  if (std::getline(in, part, ':')) c.strength = std::stod(part);
  if (c.topic.empty()) throw memgov::Error("claim spec needs a topic: " + spec);
  return c;
}

struct Session {
  memgov::Config cfg;
  memgov::EngineParams params;
  std::unique_ptr<memgov::Engine> engine;

  Session(const std::string& root, const std::string& config_path) {
    if (!config_path.empty()) cfg = memgov::Config::from_file(config_path);
    params = memgov::engine_params_from(cfg);
    engine = std::make_unique<memgov::Engine>(root, params);
  }

  ~Session() {
    try {
      if (engine) engine->store().sync_events(engine->log());
    } catch (...) {
      // a failed event flush must not mask the command's own outcome
    }
  }
};

void print_routing(const std::string& jsonl) {
  if (!jsonl.empty()) std::cout << jsonl;
}

int run_conformance(const std::string& trace_path) {
  const auto events = memgov::EventLog::parse_jsonl(read_file(trace_path));
  const auto rep = memgov::check_trace(events);
  if (rep.ok()) {
    std::cout << "ok " << rep.events << " events\n";
    return 0;
  }
  std::cout << rep.to_text();
  std::cout << rep.violations.size() << " violation(s) in " << rep.events << " events\n";
  return kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memgov: governed knowledge retention for a single-user companion"};
  app.require_subcommand(1);

  std::string root = "memgov-store";
  std::string config_path;
  app.add_option("--root", root, "store directory (created on first write)");
  app.add_option("--config", config_path, "key=value configuration file");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "capture raw content into the journal");
  std::string in_channel = "conversation";
  std::string in_file;
  std::string in_text;
  ingest->add_option("--channel", in_channel, "conversation|document|external");
  ingest->add_option("--file", in_file, "read content from a file ('-' = stdin)");
  ingest->add_option("--text", in_text, "literal content");

  // query
  auto* query = app.add_subcommand("query", "rank live entries against claims");
  std::vector<std::string> q_claims;
  std::size_t q_top = 3;
  query->add_option("--claim", q_claims, "topic[:polarity[:strength]] (repeatable)")->required();
  query->add_option("--top", q_top, "result count");

  // cycle
  auto* cycle = app.add_subcommand("cycle", "run full maintenance windows");
  int cycle_count = 1;
  cycle->add_option("--count", cycle_count, "number of windows");

  // individual operations; `run` is optional noise so both `memgov decay`
  // and `memgov decay run` work
  auto* consolidate = app.add_subcommand("consolidate", "run one consolidation pass");
  consolidate->add_subcommand("run", "route the pending buffer");
  auto* decay = app.add_subcommand("decay", "run one decay pass");
  decay->add_subcommand("run", "compress and retire the low-vitality tail");
  auto* context = app.add_subcommand("contextualize", "run one contextualize pass");
  context->add_subcommand("run", "fit depth-bounded representations");
  auto* audit = app.add_subcommand("audit", "run one audit pass");
  audit->add_subcommand("run", "suspension-test the heaviest entries");

  // gravity
  auto* gravity = app.add_subcommand("gravity", "memory gravity report");
  auto* gravity_report = gravity->add_subcommand("report", "CSV per live entry");
  gravity->require_subcommand(1);
  (void)gravity_report;

  // cold
  auto* cold = app.add_subcommand("cold", "cold storage access");
  auto* cold_fetch = cold->add_subcommand("fetch", "print an archived capture");
  std::string cold_id;
  cold_fetch->add_option("id", cold_id, "cold object id")->required();
  cold->require_subcommand(1);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print any row by id");
  std::string inspect_id;
  inspect->add_option("id", inspect_id, "buffer, wiki, cold or branch id")->required();

  // schedule
  auto* schedule = app.add_subcommand("schedule", "sleep-window planning");
  auto* schedule_status = schedule->add_subcommand("status", "plan against a homeostasis signal");
  long long sc_idle = 0;
  double sc_thermal = 0.0;
  double sc_storage = 0.0;
  long long sc_eta = -1;
  schedule_status->add_option("--idle", sc_idle, "ticks since last interaction");
  schedule_status->add_option("--thermal", sc_thermal, "load headroom consumed, 0..1");
  schedule_status->add_option("--storage", sc_storage, "capacity consumed, 0..1");
  schedule_status->add_option("--eta", sc_eta, "next known session tick (-1 = unknown)");
  schedule->require_subcommand(1);

  // sim
  auto* sim = app.add_subcommand("sim", "deterministic drift simulation");
  auto* sim_run = sim->add_subcommand("run", "run one configuration and print metrics");
  long long sim_seed = -1;
  int sim_cycles = -1;
  double sim_drift = -1.0;
  bool sim_no_promotion = false;
  bool sim_no_protection = false;
  bool sim_minority = false;
  sim_run->add_option("--seed", sim_seed, "override sim.seed");
  sim_run->add_option("--cycles", sim_cycles, "override sim.cycles");
  sim_run->add_option("--drift", sim_drift, "override sim.drift_rate");
  sim_run->add_flag("--no-promotion", sim_no_promotion, "disable minority promotion");
  sim_run->add_flag("--no-protection", sim_no_protection, "vitality-only pruning baseline");
  sim_run->add_flag("--inject-minority", sim_minority, "schedule a revision bundle");
  sim->require_subcommand(1);

  // conformance
  auto* conf = app.add_subcommand("conformance", "validate an event trace");
  auto* conf_run = conf->add_subcommand("run", "check one trace file");
  std::string trace_path;
  conf_run->add_option("trace", trace_path, "events jsonl file")->required();
  auto* conf_rules = conf->add_subcommand("rules", "list enforced rule ids");
  conf->require_subcommand(1);
  (void)conf_rules;

  // validate
  auto* validate = app.add_subcommand("validate", "check state invariants of the store");

  // events
  auto* events = app.add_subcommand("events", "event log access");
  auto* events_dump = events->add_subcommand("dump", "print the durable event stream");
  events->require_subcommand(1);
  (void)events_dump;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (conf->parsed()) {
      if (conf_run->parsed()) return run_conformance(trace_path);
      for (const auto& rule : memgov::conformance_rules()) std::cout << rule << "\n";
      return 0;
    }

    if (sim->parsed()) {
      memgov::Config cfg;
      if (!config_path.empty()) cfg = memgov::Config::from_file(config_path);
      memgov::DriftConfig dc = memgov::drift_config_from(cfg);
      if (sim_seed >= 0) dc.seed = static_cast<std::uint64_t>(sim_seed);
      if (sim_cycles >= 0) dc.cycles = sim_cycles;
      if (sim_drift >= 0.0) dc.drift_rate = sim_drift;
      if (sim_no_promotion) dc.promotion_enabled = false;
      if (sim_no_protection) dc.gravity_protection = false;
      if (sim_minority) dc.inject_minority = true;
      const auto result = memgov::run_drift(dc);
      std::cout << result.to_json().dump(2) << "\n";
      return 0;
    }

    if (events->parsed()) {
      const auto path = std::filesystem::path(root) / "events.jsonl";
      if (std::filesystem::exists(path)) std::cout << read_file(path.string());
      return 0;
    }

    Session s(root, config_path);
    memgov::Engine& eng = *s.engine;

    if (ingest->parsed()) {
      std::string raw = in_text;
      if (!in_file.empty()) {
        if (in_file == "-") {
          std::ostringstream buf;
          buf << std::cin.rdbuf();
          raw = buf.str();
        } else {
          raw = read_file(in_file);
        }
      }
      if (raw.empty()) throw memgov::Error("nothing to ingest: pass --file or --text");
      const auto r = eng.ingest(raw, channel_from(in_channel));
      std::cout << memgov::to_string(r.decision) << " " << r.id;
      if (!r.reason.empty()) std::cout << " (" << r.reason << ")";
      std::cout << "\n";
      return 0;
    }

    if (query->parsed()) {
      memgov::ClaimList claims;
      for (const auto& spec : q_claims) claims.push_back(claim_from(spec));
      const auto res = eng.query(claims, q_top);
      for (const auto& se : res.results) {
        std::cout << se.id << " " << se.score << "\n";
      }
      std::cout << "commit " << res.commit << "\n";
      return 0;
    }

    if (cycle->parsed()) {
      for (int i = 0; i < cycle_count; ++i) {
        const auto rep = eng.run_cycle();
        std::cout << "cycle " << rep.cycle << ": commits=" << rep.commits.size()
                  << " integrated=" << rep.integrated.size()
                  << " promoted=" << rep.promoted.size()
                  << " compressed=" << rep.decay_compressed
                  << " archived=" << rep.decay_archived;
        if (rep.audit_ran) std::cout << " audit=yes entropy=" << rep.query_entropy;
        std::cout << "\n";
        eng.advance(static_cast<memgov::Tick>(eng.params().ticks_per_cycle));
      }
      return 0;
    }

    // Direct operation runs compose the library the same way the engine
    // does: freeze a snapshot, run, commit once if anything changed.
    if (consolidate->parsed() || decay->parsed() || context->parsed() || audit->parsed()) {
      memgov::Store& store = eng.store();
      memgov::EventLog& log = eng.log();
      const memgov::ClaimScorer scorer(s.params.scorer);
      const auto snap = store.snapshot();
      const memgov::Tick now = eng.now() + 1;

      if (consolidate->parsed()) {
        auto run = memgov::run_consolidate(snap, scorer, s.params.consolidate, now, log);
        print_routing(run.report_jsonl());
        if (!run.changeset.empty()) store.commit(snap, run.changeset, now, log);
      } else if (decay->parsed()) {
        const auto grav = memgov::compute_gravity(*snap, s.params.gravity, now);
        auto run = memgov::run_decay(snap, grav, s.params.decay, now, log);
        std::cout << "compressed=" << run.compressed << " transitioned=" << run.transitioned
                  << " archived=" << run.archived << "\n";
        if (!run.changeset.empty()) store.commit(snap, run.changeset, now, log);
      } else if (context->parsed()) {
        auto run = memgov::run_contextualize(snap, store, {}, {}, s.params.contextualize, now, log);
        std::cout << "fitted=" << run.fitted << " refitted=" << run.refitted << "\n";
        if (!run.changeset.empty()) store.commit(snap, run.changeset, now, log);
      } else {
        auto run = memgov::run_audit(snap, scorer, {}, s.params.audit, now, log);
        print_routing(run.report_jsonl());
        if (!run.changeset.empty()) store.commit(snap, run.changeset, now, log);
      }
      return 0;
    }

    if (gravity->parsed()) {
      const auto snap = eng.snapshot();
      const auto rep = memgov::compute_gravity(*snap, s.params.gravity, eng.now());
      std::cout << "entry,centrality,fragmentation,base,eff,protected\n";
      for (const auto& [id, sc] : rep.scores) {
        std::cout << id << "," << sc.centrality << "," << sc.fragmentation << "," << sc.base
                  << "," << sc.eff << "," << (sc.protected_ ? 1 : 0) << "\n";
      }
      std::cout << "# floor=" << rep.floor << " kappa_c=" << rep.kappa_c << "\n";
      return 0;
    }

    if (cold->parsed()) {
      const auto snap = eng.snapshot();
      const memgov::ColdObject* obj = snap->find_cold(cold_id);
      if (obj == nullptr) throw memgov::Error("no cold object " + cold_id);
      const auto blob = eng.store().get_blob(obj->blob_hash);
      if (!blob) throw memgov::Error("cold object " + cold_id + " has no resolvable blob");
      std::cout << *blob;
      return 0;
    }

    if (inspect->parsed()) {
      const auto snap = eng.snapshot();
      nlohmann::json j;
      if (const auto* e = snap->find_entry(inspect_id)) j = *e;
      else if (const auto* b = snap->find_buffer(inspect_id)) j = *b;
      else if (const auto* c = snap->find_cold(inspect_id)) j = *c;
      else if (const auto* br = snap->find_branch(inspect_id)) j = *br;
      else throw memgov::Error("nothing resolves " + inspect_id);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (schedule->parsed()) {
      memgov::HomeostasisVector hv;
      hv.idle_ticks = sc_idle;
      hv.thermal = sc_thermal;
      hv.storage = sc_storage;
      if (sc_eta >= 0) hv.next_eta = sc_eta;
      const auto plan = eng.plan_window(hv);
      std::cout << memgov::to_string(plan.decision) << " reason=" << plan.reason;
      if (plan.decision == memgov::WindowPlan::Decision::scheduled) {
        std::cout << " start_at=" << plan.start_at;
      }
      std::cout << "\n";
      return 0;
    }

    if (validate->parsed()) {
      const auto violations = eng.validate();
      for (const auto& v : violations) {
        std::cout << v.rule << " " << v.object_id << " " << v.detail << "\n";
      }
      if (!violations.empty()) {
        std::cout << violations.size() << " invariant violation(s)\n";
        return kExitError;
      }
      std::cout << "ok\n";
      return 0;
    }
  } catch (const memgov::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
