#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "memgov/hash.hpp"
#include "memgov/model.hpp"
#include "memgov/scorer.hpp"
#include "memgov/store.hpp"

namespace testing {

inline memgov::ClaimTuple claim(std::string topic, int polarity, double strength,
                                std::string text = "") {
  memgov::ClaimTuple c;
  c.topic = std::move(topic);
  c.polarity = polarity;
  c.strength = strength;
  c.text = text.empty() ? "about " + c.topic : std::move(text);
  return c;
}

// A wiki entry whose commit_hash really is the hash of its claims, so
// validate_state stays quiet when the blob is in the store.
inline memgov::WikiEntry entry(const memgov::ClaimList& claims, memgov::Tick last_accessed = 0) {
  memgov::WikiEntry e;
  e.claims = memgov::canonical_claims(claims);
  e.commit_hash = memgov::content_hash(memgov::claims_to_jsonl(e.claims));
  e.id = e.commit_hash;
  e.last_accessed = last_accessed;
  return e;
}

// Scratch directory cleaned up on scope exit.
struct TempDir {
  std::string path;

  TempDir() {
    std::string tmpl = "/tmp/memgov-test-XXXXXX";
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing
