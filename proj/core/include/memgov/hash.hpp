#pragma once

#include <string>
#include <string_view>

#include "memgov/types.hpp"

namespace memgov {

// Canonical content bytes: valid UTF-8, LF line endings, no trailing
// whitespace per line. Input is required to be NFC-normalized already;
// the canonicalizer validates UTF-8 and leaves code points untouched.
// Throws MalformedContent on invalid UTF-8.
std::string canonicalize(std::string_view raw);

// SHA-256 of the bytes, hex lowercase.
std::string sha256_hex(std::string_view bytes);

// sha256_hex(canonicalize(raw)) — the stable content id used everywhere.
std::string content_hash(std::string_view raw);

bool is_valid_utf8(std::string_view bytes);

}  // namespace memgov
