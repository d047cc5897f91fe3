#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace nimbus::config {

/// Flat `key = value` text config. '#' starts a comment, blank lines are
/// skipped, keys may not repeat. Typed getters throw ConfigError on
/// malformed values; the _or variants fall back when the key is absent.
class KeyValues {
 public:
  static KeyValues parse_file(const std::string& path);
  static KeyValues parse_string(std::string_view text, const std::string& origin = "<config>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_long_or(const std::string& key, long fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& items() const { return items_; }

  /// Rejects any key outside `allowed` (typo protection), naming the key.
  void require_keys_in(std::initializer_list<const char*> allowed) const;

 private:
  std::map<std::string, std::string> items_;
  std::string origin_;
};

}  // namespace nimbus::config
