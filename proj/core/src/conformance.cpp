#include "memgov/conformance.hpp"

#include <set>
#include <sstream>

namespace memgov {

namespace {

std::string str(const nlohmann::json& p, const char* key) {
  const auto it = p.find(key);
  if (it == p.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

bool truthy(const nlohmann::json& p, const char* key) {
  const auto it = p.find(key);
  return it != p.end() && it->is_boolean() && it->get<bool>();
}

bool has_number(const nlohmann::json& p, const char* key) {
  const auto it = p.find(key);
  return it != p.end() && it->is_number();
}

double num(const nlohmann::json& p, const char* key, double def) {
  const auto it = p.find(key);
  if (it == p.end() || !it->is_number()) return def;
  return it->get<double>();
}

bool is_op_start(const std::string& op, std::string& name) {
  if (op == ev::contextualize_start) name = "contextualize";
  else if (op == ev::consolidate_start) name = "consolidate";
  else if (op == ev::decay_start) name = "decay";
  else if (op == ev::audit_start) name = "audit";
  else return false;
  return true;
}

bool is_op_end(const std::string& op, std::string& name) {
  if (op == ev::contextualize_end) name = "contextualize";
  else if (op == ev::consolidate_end) name = "consolidate";
  else if (op == ev::decay_end) name = "decay";
  else if (op == ev::audit_end) name = "audit";
  else return false;
  return true;
}

struct Checker {
  ConformanceReport rep;

  bool in_ingest = false;
  std::string op;  // empty = hot lane
  bool op_ended = false;
  int op_index_commits = 0;
  bool multi_flagged = false;
  bool saw_phase1 = false;
  bool saw_phase2 = false;
  bool have_floor = false;
  double floor = 0.0;
  bool branch_closed = false;
  std::set<std::string> audit_recorded;
  std::set<std::string> buffer_written;
  std::set<std::string> cold_stored;

  void add(const char* rule, const TraceEvent& e, std::string detail) {
    rep.violations.push_back({rule, e.seq, std::move(detail)});
  }

  void open_op(const std::string& name, const TraceEvent& e) {
    if (!op.empty() && !op_ended) {
      add("unclosed-operation", e, op + " run never ended before " + name + " started");
    }
    op = name;
    op_ended = false;
    op_index_commits = 0;
    multi_flagged = false;
    saw_phase1 = false;
    saw_phase2 = false;
    have_floor = false;
    branch_closed = false;
    audit_recorded.clear();

    if (str(e.payload, "snapshot").empty()) {
      add("missing-snapshot", e, name + " started without a frozen snapshot id");
    }
    if (name == "consolidate" && str(e.payload, "model").empty()) {
      add("missing-model-stamp", e, "consolidation without a scorer version stamp");
    }
    if (name == "decay" && has_number(e.payload, "floor")) {
      have_floor = true;
      floor = num(e.payload, "floor", 0.0);
    }
  }

  void end_window(const TraceEvent& e) {
    if (!op.empty() && !op_ended && !truthy(e.payload, "aborted")) {
      add("unclosed-operation", e, op + " run never ended before the window closed");
    }
    op.clear();
    op_ended = false;
  }

  void on(const TraceEvent& e) {
    const auto& p = e.payload;
    std::string name;

    if (e.op == ev::ingest_start) {
      if (in_ingest) add("unclosed-ingestion", e, "ingestion opened inside an open ingestion");
      in_ingest = true;
    } else if (e.op == ev::ingest_end) {
      in_ingest = false;
    } else if (e.op == ev::buffer_write) {
      const std::string entry = str(p, "entry");
      if (!in_ingest) add("buffer-write-outside-ingestion", e, "buffer row written with no ingestion open");
      if (entry.empty()) {
        add("missing-identity", e, "buffer write without a content identity");
      } else if (!buffer_written.insert(entry).second) {
        add("duplicate-buffer-write", e, "second buffer row for " + entry);
      }
    } else if (e.op == ev::wiki_read) {
      if (in_ingest) {
        add("triage-wiki-read", e, "knowledge base consulted during ingestion");
      } else if (op == "consolidate" && str(p, "scope") == "phase2" && !saw_phase2) {
        add("phase-order", e, "coherence read before the structural pass finished");
      }
    } else if (e.op == ev::wiki_write) {
      if (in_ingest) add("triage-wiki-write", e, "knowledge base written during ingestion");
    } else if (e.op == ev::classify) {
      const bool coherence = p.contains("cohesion") || p.contains("similarity");
      if (coherence && in_ingest) {
        add("triage-coherence-work", e, "coherence scoring performed during ingestion");
      } else if (coherence && op == "consolidate" && !saw_phase2) {
        add("phase-order", e, "coherence classification before phase two opened");
      }
    } else if (e.op == ev::phase1_start) {
      if (op != "consolidate") add("phase-order", e, "structural phase outside a consolidation run");
      saw_phase1 = true;
    } else if (e.op == ev::phase2_start) {
      if (op != "consolidate" || !saw_phase1) {
        add("phase-order", e, "coherence phase before the structural phase");
      }
      saw_phase2 = true;
    } else if (is_op_start(e.op, name)) {
      open_op(name, e);
    } else if (is_op_end(e.op, name)) {
      if (name == op) op_ended = true;
    } else if (e.op == ev::commit) {
      bool index_write = false;
      bool tagged = false;
      for (const char* key : {"w_entries", "w_edges", "w_branches", "w_audit", "w_cold", "w_tombstones"}) {
        if (has_number(p, key)) {
          tagged = true;
          if (num(p, key, 0.0) > 0.0) index_write = true;
        }
      }
      if (!tagged) index_write = true;  // untagged commits count conservatively
      if (!op.empty() && index_write) {
        ++op_index_commits;
        if (op_index_commits > 1 && !multi_flagged) {
          add("multiple-commits-per-run", e, op + " run produced more than one index commit");
          multi_flagged = true;
        }
      }
    } else if (e.op == ev::edge_write) {
      if (op.empty() || in_ingest) {
        add("edge-write-on-hot-path", e, "graph edge written outside a sleep operation");
      }
    } else if (e.op == ev::cold_store) {
      cold_stored.insert(str(p, "entry"));
    } else if (e.op == ev::compress) {
      const std::string entry = str(p, "entry");
      if (cold_stored.count(entry) == 0) {
        add("representation-before-archive", e, "compressed " + entry + " with no archived capture");
      }
      if (op == "decay" && have_floor && has_number(p, "base") &&
          num(p, "base", 0.0) >= floor) {
        add("protected-entry-compressed", e, entry + " compressed at or above the protection floor");
      }
    } else if (e.op == ev::depth_rep) {
      const std::string entry = str(p, "entry");
      if (cold_stored.count(entry) == 0) {
        add("representation-before-archive", e, "representation for " + entry + " with no archived capture");
      }
    } else if (e.op == ev::tombstone) {
      if (str(p, "cold").empty()) {
        add("tombstone-without-cold", e, "content retired without a resolvable cold object");
      }
    } else if (e.op == ev::transition) {
      if (op == "audit") {
        const std::string entity = str(p, "entity");
        const std::string to = str(p, "to");
        const bool allowed = audit_recorded.count(entity) != 0 ||
                             (branch_closed && (to == "rejected" || to == "closed"));
        if (!allowed) {
          add("transition-before-record", e, entity + " changed state before its audit record");
        }
      }
    } else if (e.op == ev::audit_record) {
      audit_recorded.insert(str(p, "entry"));
    } else if (e.op == ev::branch_close) {
      if (str(p, "reason").empty()) {
        add("silent-branch-closure", e, "branch closed without a recorded reason");
      }
      branch_closed = true;
    } else if (e.op == ev::hard_delete) {
      add("hard-delete", e, "event stream contains a deletion");
    } else if (e.op == ev::federation_send) {
      if (!truthy(p, "anonymized")) {
        add("federation-unanonymized", e, "pattern shared without anonymization");
      }
    } else if (e.op == ev::read_serve) {
      if (str(p, "commit").empty()) {
        add("read-missing-commit", e, "read served without naming its snapshot commit");
      }
    } else if (e.op == ev::window_end) {
      end_window(e);
    }
  }
};

}  // namespace

const std::vector<std::string>& conformance_rules() {
  static const std::vector<std::string> rules = {
      "triage-wiki-read",
      "triage-wiki-write",
      "triage-coherence-work",
      "missing-identity",
      "duplicate-buffer-write",
      "unclosed-ingestion",
      "buffer-write-outside-ingestion",
      "missing-snapshot",
      "missing-model-stamp",
      "phase-order",
      "multiple-commits-per-run",
      "edge-write-on-hot-path",
      "representation-before-archive",
      "protected-entry-compressed",
      "tombstone-without-cold",
      "transition-before-record",
      "silent-branch-closure",
      "hard-delete",
      "unclosed-operation",
      "federation-unanonymized",
      "read-missing-commit",
  };
  return rules;
}

ConformanceReport check_trace(const std::vector<TraceEvent>& events) {
  Checker c;
  c.rep.events = events.size();
  for (const auto& e : events) c.on(e);
  if (c.in_ingest) {
    TraceEvent eof;
    eof.seq = events.empty() ? -1 : events.back().seq;
    c.add("unclosed-ingestion", eof, "trace ended with an ingestion still open");
  }
  return c.rep;
}

std::string ConformanceReport::to_text() const {
  std::ostringstream out;
  for (const auto& v : violations) {
    out << v.rule << " seq=" << v.seq << " " << v.detail << "\n";
  }
  return out.str();
}

}  // namespace memgov
