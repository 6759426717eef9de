#include <doctest.h>

#include "memgov/hash.hpp"
#include "memgov/types.hpp"

using namespace memgov;

TEST_CASE("sha256 known digests") {
  CHECK(sha256_hex("Hello\n") ==
        "66a045b452102c59d840ec097d59d9467e13a3f34f6494e539ffd32c1bb35f18");
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("canonicalize normalizes line endings and trailing whitespace") {
  CHECK(canonicalize("a\r\nb\r\n") == "a\nb\n");
  CHECK(canonicalize("a\rb") == "a\nb");
  CHECK(canonicalize("line  \t\nnext\t \n") == "line\nnext\n");
  CHECK(canonicalize("  leading stays\n") == "  leading stays\n");
  CHECK(canonicalize("no newline at end  ") == "no newline at end");
}

TEST_CASE("canonicalize is idempotent") {
  const std::string once = canonicalize("x \r\n y\t\r\nz ");
  CHECK(canonicalize(once) == once);
}

TEST_CASE("canonicalize leaves multibyte code points untouched") {
  const std::string s = "caf\xc3\xa9 \xf0\x9f\x8c\x8d\n";  // café, globe emoji
  CHECK(canonicalize(s) == s);
}

TEST_CASE("canonicalize rejects invalid utf-8") {
  CHECK_THROWS_AS(canonicalize("ok\xff"), MalformedContent);
  CHECK_THROWS_AS(canonicalize("\xc0\x80"), MalformedContent);  // overlong NUL
}

TEST_CASE("utf-8 validation edge cases") {
  CHECK(is_valid_utf8(""));
  CHECK(is_valid_utf8("plain ascii"));
  CHECK(is_valid_utf8("\xf0\x9f\x98\x80"));        // U+1F600
  CHECK_FALSE(is_valid_utf8("\x80"));              // stray continuation
  CHECK_FALSE(is_valid_utf8("\xc3"));              // truncated sequence
  CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));      // UTF-16 surrogate
  CHECK_FALSE(is_valid_utf8("\xf5\x80\x80\x80"));  // above U+10FFFF
  CHECK_FALSE(is_valid_utf8("\xe0\x80\xa0"));      // overlong 3-byte
}

TEST_CASE("content hash is the digest of the canonical bytes") {
  CHECK(content_hash("Hello \r\n") == sha256_hex("Hello\n"));
  CHECK(content_hash("Hello\n") == content_hash("Hello  \r\n"));
  CHECK(content_hash("a") != content_hash("b"));
}
