#include "memgov/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "memgov/model.hpp"

namespace memgov {

std::string claims_to_jsonl(const ClaimList& claims) {
  std::string out;
  for (const auto& c : claims) {
    nlohmann::json j;
    to_json(j, c);
    out += j.dump();
    out += '\n';
  }
  return out;
}

ClaimList claims_from_jsonl(const std::string& text) {
  ClaimList out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      ClaimTuple c;
      from_json(nlohmann::json::parse(line), c);
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedContent("claim line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ClaimList canonical_claims(ClaimList claims) {
  std::sort(claims.begin(), claims.end(), [](const ClaimTuple& a, const ClaimTuple& b) {
    if (a.topic != b.topic) return a.topic < b.topic;
    if (a.polarity != b.polarity) return a.polarity > b.polarity;
    if (a.strength != b.strength) return a.strength > b.strength;
    return a.text < b.text;
  });
  return claims;
}

double entropy_bits(const std::map<std::string, std::int64_t>& counts) {
  std::int64_t total = 0;
  for (const auto& [k, n] : counts) total += n;
  if (total <= 0) throw EmptyDistribution("entropy of empty distribution");
  double h = 0.0;
  for (const auto& [k, n] : counts) {
    if (n <= 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

using Key = std::pair<std::string, int>;  // (topic, polarity)

std::map<Key, double> key_strengths(const ClaimList& claims) {
  std::map<Key, double> m;
  for (const auto& c : claims) {
    auto& s = m[{c.topic, c.polarity}];
    s = std::max(s, c.strength);
  }
  return m;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double ClaimScorer::similarity(const ClaimList& a, const ClaimList& b) const {
  if (a.empty() || b.empty()) throw EmptyClaims("similarity over empty claim list");
  const auto ka = key_strengths(a);
  const auto kb = key_strengths(b);
  double num = 0.0, den = 0.0;
  auto ia = ka.begin();
  auto ib = kb.begin();
  while (ia != ka.end() || ib != kb.end()) {
    if (ib == kb.end() || (ia != ka.end() && ia->first < ib->first)) {
      den += ia->second;
      ++ia;
    } else if (ia == ka.end() || ib->first < ia->first) {
      den += ib->second;
      ++ib;
    } else {
      num += std::min(ia->second, ib->second);
      den += std::max(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

double ClaimScorer::contradiction(const ClaimList& a, const ClaimList& b) const {
  if (a.empty() || b.empty()) throw EmptyClaims("contradiction over empty claim list");
  const auto ka = key_strengths(a);
  const auto kb = key_strengths(b);
  std::set<std::string> topics_a, topics_b;
  for (const auto& [k, s] : ka) topics_a.insert(k.first);
  for (const auto& [k, s] : kb) topics_b.insert(k.first);
  std::vector<std::string> shared;
  std::set_intersection(topics_a.begin(), topics_a.end(), topics_b.begin(), topics_b.end(),
                        std::back_inserter(shared));
  if (shared.empty()) return 0.0;
  double mass = 0.0;
  for (const auto& t : shared) {
    auto get = [](const std::map<Key, double>& m, const std::string& topic, int pol) {
      auto it = m.find({topic, pol});
      return it == m.end() ? 0.0 : it->second;
    };
    mass += std::min(get(ka, t, 1), get(kb, t, -1));
    mass += std::min(get(ka, t, -1), get(kb, t, 1));
  }
  return clamp01(mass / static_cast<double>(shared.size()));
}

double ClaimScorer::task_alignment(const ClaimList& claims) const {
  if (claims.empty()) throw EmptyClaims("task alignment over empty claim list");
  if (cfg_.task_topics.empty()) return 0.5;
  const std::set<std::string> task(cfg_.task_topics.begin(), cfg_.task_topics.end());
  double on_task = 0.0, total = 0.0;
  for (const auto& c : claims) {
    total += c.strength;
    if (task.count(c.topic)) on_task += c.strength;
  }
  return total == 0.0 ? 0.0 : on_task / total;
}

bool ClaimScorer::safety_flagged(const ClaimList& claims) const {
  const std::set<std::string> safety(cfg_.safety_topics.begin(), cfg_.safety_topics.end());
  if (safety.empty()) return false;
  return std::any_of(claims.begin(), claims.end(),
                     [&safety](const ClaimTuple& c) { return safety.count(c.topic) > 0; });
}

double query_score(const Scorer& s, const ClaimList& query, const EntryId& id,
                   const std::vector<std::pair<EntryId, ClaimList>>& corpus) {
  const ClaimList* target = nullptr;
  for (const auto& [eid, claims] : corpus)
    if (eid == id) target = &claims;
  if (target == nullptr) throw UnknownEntry("query_score target not in corpus: " + id);
  double interference = 0.0;
  for (const auto& [eid, claims] : corpus) {
    if (eid == id) continue;
    interference = std::max(interference, s.contradiction(claims, *target));
  }
  return clamp01(s.similarity(query, *target) - interference);
}

std::vector<ScoredEntry> rank(const Scorer& s, const ClaimList& query,
                              const std::vector<std::pair<EntryId, ClaimList>>& corpus,
                              std::size_t top_k) {
  std::vector<ScoredEntry> scored;
  scored.reserve(corpus.size());
  for (const auto& [id, claims] : corpus)
    scored.push_back({id, query_score(s, query, id, corpus)});
  std::sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > top_k) scored.resize(top_k);
  return scored;
}

}  // namespace memgov
