#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memgov {

// Flat key-value configuration. File format: one `key = value` per line,
// '#' starts a comment. Keys are dotted paths (e.g. decay.threshold).
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& def) const;
  double get(const std::string& key, double def) const;
  long long get(const std::string& key, long long def) const;
  int get(const std::string& key, int def) const;
  bool get(const std::string& key, bool def) const;

  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace memgov
