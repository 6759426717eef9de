#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "memgov/scorer.hpp"
#include "support.hpp"

using namespace memgov;
using testing::claim;

TEST_CASE("jsonl wire form sorts keys and round-trips") {
  ClaimList claims = {claim("beta", -1, 0.25, "b text"), claim("alpha", 1, 1.0, "a text")};
  const std::string text = claims_to_jsonl(claims);
  const auto first_line = text.substr(0, text.find('\n'));
  CHECK(first_line ==
        R"({"polarity":-1,"strength":0.25,"text":"b text","topic":"beta"})");
  CHECK(claims_from_jsonl(text) == claims);
}

TEST_CASE("claims_from_jsonl rejects malformed lines but leaves range checks to valid()") {
  CHECK_THROWS_AS(claims_from_jsonl("{broken"), MalformedContent);
  CHECK_THROWS_AS(claims_from_jsonl(R"({"topic":"t"})"), MalformedContent);
  CHECK(claims_from_jsonl("\n\n").empty());
  // shape-valid but out-of-range tuples parse; semantic layers reject them
  const auto odd = claims_from_jsonl(R"({"polarity":2,"strength":0.5,"text":"x","topic":"t"})");
  REQUIRE(odd.size() == 1);
  CHECK_FALSE(odd[0].valid());
}

TEST_CASE("canonical order: topic asc, polarity desc, strength desc, text asc") {
  ClaimList in = {
      claim("b", 1, 0.2, "z"), claim("a", -1, 0.9, "m"), claim("a", 1, 0.5, "k"),
      claim("a", 1, 0.9, "k"), claim("a", 1, 0.9, "a"),
  };
  const auto out = canonical_claims(in);
  REQUIRE(out.size() == 5);
  CHECK(out[0] == claim("a", 1, 0.9, "a"));
  CHECK(out[1] == claim("a", 1, 0.9, "k"));
  CHECK(out[2] == claim("a", 1, 0.5, "k"));
  CHECK(out[3] == claim("a", -1, 0.9, "m"));
  CHECK(out[4] == claim("b", 1, 0.2, "z"));
}

TEST_CASE("entropy over counts") {
  std::map<std::string, std::int64_t> uniform8;
  for (int i = 0; i < 8; ++i) uniform8["t" + std::to_string(i)] = 3;
  CHECK(entropy_bits(uniform8) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(entropy_bits({{"only", 17}}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(entropy_bits({}), EmptyDistribution);
  CHECK_THROWS_AS(entropy_bits({{"a", 0}}), EmptyDistribution);
}

TEST_CASE("similarity hand values") {
  ClaimScorer s;
  ClaimList charter = {claim("t", 1, 1.0)};
  ClaimList arrival = {claim("t", 1, 0.75), claim("x", 1, 0.15)};
  // weighted jaccard: min-sum 0.75 over max-sum 1.0 + 0.15
  CHECK(s.similarity(charter, arrival) == doctest::Approx(0.75 / 1.15));
  CHECK(s.similarity(arrival, charter) == doctest::Approx(0.75 / 1.15));

  CHECK(s.similarity(charter, charter) == doctest::Approx(1.0));
  CHECK(s.similarity({claim("t", 1, 0.9)}, {claim("t", -1, 0.9)}) == doctest::Approx(0.0));
  CHECK(s.similarity({claim("a", 1, 0.9)}, {claim("b", 1, 0.9)}) == doctest::Approx(0.0));

  // duplicate (topic, polarity) keys collapse to the strongest claim
  ClaimList dup = {claim("t", 1, 0.3), claim("t", 1, 0.9)};
  CHECK(s.similarity(dup, charter) == doctest::Approx(0.9));

  CHECK_THROWS_AS(s.similarity({}, charter), EmptyClaims);
  CHECK_THROWS_AS(s.similarity(charter, {}), EmptyClaims);
}

TEST_CASE("contradiction hand values") {
  ClaimScorer s;
  CHECK(s.contradiction({claim("t", 1, 0.8)}, {claim("t", -1, 0.6)}) == doctest::Approx(0.6));
  CHECK(s.contradiction({claim("t", 1, 0.8)}, {claim("t", 1, 0.6)}) == doctest::Approx(0.0));
  CHECK(s.contradiction({claim("a", 1, 0.8)}, {claim("b", -1, 0.6)}) == doctest::Approx(0.0));

  // both polarity directions accumulate on one topic
  ClaimList a = {claim("t", 1, 0.8), claim("t", -1, 0.2)};
  ClaimList b = {claim("t", -1, 0.6), claim("t", 1, 0.1)};
  CHECK(s.contradiction(a, b) == doctest::Approx(0.7));

  // denominator is the count of shared topics
  ClaimList a2 = {claim("t", 1, 1.0), claim("u", 1, 0.4)};
  ClaimList b2 = {claim("t", -1, 1.0), claim("u", -1, 0.4)};
  CHECK(s.contradiction(a2, b2) == doctest::Approx((1.0 + 0.4) / 2));
  CHECK(s.contradiction(a2, b2) == s.contradiction(b2, a2));
}

TEST_CASE("task alignment is strength share on task topics") {
  ClaimScorer bare;
  CHECK(bare.task_alignment({claim("t", 1, 0.9)}) == doctest::Approx(0.5));

  ScorerConfig cfg;
  cfg.task_topics = {"work"};
  ClaimScorer s(cfg);
  CHECK(s.task_alignment({claim("work", 1, 0.6), claim("hobby", 1, 0.2)}) ==
        doctest::Approx(0.6 / 0.8));
  CHECK(s.task_alignment({claim("hobby", 1, 0.2)}) == doctest::Approx(0.0));
  CHECK(s.task_alignment({claim("work", -1, 0.3)}) == doctest::Approx(1.0));
}

TEST_CASE("safety flag matches configured topics only") {
  ScorerConfig cfg;
  cfg.safety_topics = {"medication"};
  ClaimScorer s(cfg);
  CHECK(s.safety_flagged({claim("medication", 1, 0.1), claim("x", 1, 0.9)}));
  CHECK_FALSE(s.safety_flagged({claim("meds", 1, 0.9)}));
  ClaimScorer bare;
  CHECK_FALSE(bare.safety_flagged({claim("medication", 1, 0.9)}));
}

TEST_CASE("query score subtracts worst contradiction pressure") {
  ClaimScorer s;
  ClaimList query = {claim("t", 1, 1.0)};
  std::vector<std::pair<EntryId, ClaimList>> corpus = {
      {"target", {claim("t", 1, 0.8)}},
      {"rival", {claim("t", -1, 0.5)}},
  };
  const double base = s.similarity(query, corpus[0].second);
  const double pressure = s.contradiction(corpus[0].second, corpus[1].second);
  CHECK(query_score(s, query, "target", corpus) == doctest::Approx(base - pressure));

  // a supporting neighbour exerts no pressure
  corpus[1] = {"ally", {claim("t", 1, 0.5)}};
  CHECK(query_score(s, query, "target", corpus) == doctest::Approx(base));

  CHECK_THROWS_AS(query_score(s, query, "absent", corpus), UnknownEntry);
}

TEST_CASE("query score properties over random corpora") {
  ClaimScorer s;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> topic(0, 3);
  std::uniform_real_distribution<double> strength(0.05, 1.0);
  auto random_claims = [&] {
    ClaimList c;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i)
      c.push_back(claim("t" + std::to_string(topic(rng)), rng() % 2 ? 1 : -1, strength(rng)));
    return c;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<EntryId, ClaimList>> corpus;
    for (int i = 0; i < 4; ++i) corpus.emplace_back("e" + std::to_string(i), random_claims());
    const ClaimList query = random_claims();
    const double before = query_score(s, query, "e0", corpus);
    CHECK(before >= 0.0);
    CHECK(before <= 1.0);

    // adding a pure supporter of e0 never lowers its score
    ClaimList support = corpus[0].second;
    corpus.emplace_back("supporter", support);
    const double after_support = query_score(s, query, "e0", corpus);
    CHECK(after_support >= before - 1e-12);

    // adding a flat contradictor never raises it
    ClaimList contra;
    for (auto c : corpus[0].second) {
      c.polarity = -c.polarity;
      contra.push_back(c);
    }
    corpus.back() = {"contradictor", contra};
    const double after_contra = query_score(s, query, "e0", corpus);
    CHECK(after_contra <= before + 1e-12);
  }
}

TEST_CASE("rank orders by score then id and truncates") {
  ClaimScorer s;
  ClaimList query = {claim("t", 1, 1.0)};
  std::vector<std::pair<EntryId, ClaimList>> corpus = {
      {"c", {claim("t", 1, 0.8)}},
      {"a", {claim("t", 1, 0.8)}},
      {"b", {claim("t", 1, 0.9)}},
      {"d", {claim("unrelated", 1, 0.9)}},
  };
  const auto ranked = rank(s, query, corpus, 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].id == "b");
  CHECK(ranked[1].id == "a");  // ties break on id
  CHECK(ranked[2].id == "c");
  CHECK(rank(s, query, corpus, 10).size() == 4);
}
