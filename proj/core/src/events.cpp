#include "memgov/events.hpp"

#include <sstream>

namespace memgov {

nlohmann::json TraceEvent::to_json() const {
  nlohmann::json j;
  j["tick"] = tick;
  j["seq"] = seq;
  j["op"] = op;
  for (auto it = payload.begin(); it != payload.end(); ++it) {
    // The envelope owns these keys; a payload must never rewrite them.
    if (it.key() == "tick" || it.key() == "seq" || it.key() == "op") continue;
    j[it.key()] = it.value();
  }
  return j;
}

TraceEvent TraceEvent::from_json(const nlohmann::json& j) {
  TraceEvent e;
  if (!j.is_object() || !j.contains("tick") || !j.contains("op")) {
    throw MalformedTrace("event record missing tick/op");
  }
  if (!j["tick"].is_number_integer()) throw MalformedTrace("tick must be an integer");
  if (!j["op"].is_string()) throw MalformedTrace("op must be a string");
  e.tick = j["tick"].get<Tick>();
  e.seq = j.value("seq", 0);
  e.op = j["op"].get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "tick" || it.key() == "seq" || it.key() == "op") continue;
    e.payload[it.key()] = it.value();
  }
  return e;
}

TraceEvent EventLog::emit(Tick tick, std::string op, nlohmann::json payload) {
  std::lock_guard<std::mutex> lock(mu_);
  TraceEvent e;
  e.tick = tick;
  e.seq = next_seq_++;
  e.op = std::move(op);
  e.payload = std::move(payload);
  events_.push_back(e);
  return e;
}

std::vector<TraceEvent> EventLog::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return std::vector<TraceEvent>(events_.begin(), events_.end());
}

size_t EventLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_.size();
}

void EventLog::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  events_.clear();
  next_seq_ = 0;
}

void EventLog::set_next_seq(std::int64_t seq) {
  std::lock_guard<std::mutex> lock(mu_);
  next_seq_ = std::max(next_seq_, seq);
}

std::string EventLog::to_jsonl() const {
  std::ostringstream out;
  for (const auto& e : events()) out << e.to_json().dump() << '\n';
  return out.str();
}

std::vector<TraceEvent> EventLog::parse_jsonl(const std::string& text) {
  std::vector<TraceEvent> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw MalformedTrace("line " + std::to_string(lineno) + ": not valid JSON");
    }
    out.push_back(TraceEvent::from_json(j));
  }
  return out;
}

std::string EventLog::transitions_jsonl() const {
  std::ostringstream out;
  for (const auto& e : events()) {
    if (e.op != ev::transition) continue;
    nlohmann::json j;
    j["tick"] = e.tick;
    j["entity"] = e.payload.value("entity", "");
    j["event"] = e.payload.value("event", "");
    j["from"] = e.payload.value("from", "");
    j["to"] = e.payload.value("to", "");
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace memgov
