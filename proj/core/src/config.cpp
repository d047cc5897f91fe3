#include "nimbus/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "nimbus/error.hpp"

namespace nimbus::config {

namespace {

std::string_view trim(std::string_view text) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

}  // namespace

KeyValues KeyValues::parse_string(std::string_view text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    ++line_no;
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view line = text.substr(start, stop - start);
    start = stop + 1;

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', found '" + std::string(line) + "'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (!kv.items_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "'");
    }
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

bool KeyValues::has(const std::string& key) const { return items_.contains(key); }

std::string KeyValues::get_string(const std::string& key) const {
  const auto it = items_.find(key);
  if (it == items_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_string_or(const std::string& key, const std::string& fallback) const {
  const auto it = items_.find(key);
  return it == items_.end() ? fallback : it->second;
}

double KeyValues::get_double_or(const std::string& key, double fallback) const {
  const auto it = items_.find(key);
  if (it == items_.end()) return fallback;
  const std::string& text = it->second;
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + text + "'");
  }
  return value;
}

long KeyValues::get_long_or(const std::string& key, long fallback) const {
  const auto it = items_.find(key);
  if (it == items_.end()) return fallback;
  const std::string& text = it->second;
  long value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + text + "'");
  }
  return value;
}

std::uint64_t KeyValues::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  const auto it = items_.find(key);
  if (it == items_.end()) return fallback;
  const std::string& text = it->second;
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer: '" + text +
                      "'");
  }
  return value;
}

bool KeyValues::get_bool_or(const std::string& key, bool fallback) const {
  const auto it = items_.find(key);
  if (it == items_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + it->second + "'");
}

void KeyValues::require_keys_in(std::initializer_list<const char*> allowed) const {
  for (const auto& [key, _] : items_) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&key](const char* name) { return key == name; });
    if (!known) throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }
}

}  // namespace nimbus::config
