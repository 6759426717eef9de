#include "memgov/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>

namespace memgov {

bool is_valid_utf8(std::string_view bytes) {
  size_t i = 0;
  const auto n = bytes.size();
  while (i < n) {
    const unsigned char c = bytes[i];
    size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      if (c < 0xC2) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      if (c > 0xF4) return false;  // above U+10FFFF
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(bytes[i + k]) & 0xC0) != 0x80) return false;
    }
    if (len == 3) {
      const unsigned char c1 = bytes[i + 1];
      if (c == 0xE0 && c1 < 0xA0) return false;             // overlong
      if (c == 0xED && c1 > 0x9F) return false;             // surrogate
    }
    if (len == 4) {
      const unsigned char c1 = bytes[i + 1];
      if (c == 0xF0 && c1 < 0x90) return false;             // overlong
      if (c == 0xF4 && c1 > 0x8F) return false;
    }
    i += len;
  }
  return true;
}

std::string canonicalize(std::string_view raw) {
  if (!is_valid_utf8(raw)) throw MalformedContent("content is not valid UTF-8");
  std::string out;
  out.reserve(raw.size());
  std::string line;
  auto flush_line = [&] {
    size_t end = line.size();
    while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t')) --end;
    out.append(line, 0, end);
    line.clear();
  };
  for (size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '\r') {
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
      flush_line();
      out.push_back('\n');
    } else if (c == '\n') {
      flush_line();
      out.push_back('\n');
    } else {
      line.push_back(c);
    }
  }
  flush_line();
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string content_hash(std::string_view raw) {
  return sha256_hex(canonicalize(raw));
}

}  // namespace memgov
