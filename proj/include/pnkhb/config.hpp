//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_CONFIG_HPP
#define PNKHB_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pnkhb {

/// Configuration problem tied to a source line (0 when no line applies).
class ConfigError: public std::runtime_error {
public:
  ConfigError(std::string source, int line, const std::string &what)
      : std::runtime_error(format(source, line, what)), line_(line) { }

  int line() const { return line_; }

private:
  static std::string format(const std::string &source, int line,
                            const std::string &what) {
    std::string out = source.empty() ? "config" : source;
    if (line > 0)
      out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  int line_;
};

/// Flat key-value configuration: one `dotted.key = value` per line, `#`
/// starts a comment, blank lines are ignored. Keys are unique.
class Config {
public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(std::istream &in, std::string source = {}) {
    Config cfg;
    cfg.source_ = std::move(source);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      std::string_view text(raw);
      if (hash != std::string::npos)
        text = text.substr(0, hash);
      text = trim(text);
      if (text.empty())
        continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(cfg.source_, line, "expected 'key = value'");
      const std::string key(trim(text.substr(0, eq)));
      const std::string value(trim(text.substr(eq + 1)));
      if (key.empty() || !valid_key(key))
        throw ConfigError(cfg.source_, line, "invalid key '" + key + "'");
      if (value.empty())
        throw ConfigError(cfg.source_, line, "empty value for '" + key + "'");
      if (auto it = cfg.entries_.find(key); it != cfg.entries_.end())
        throw ConfigError(cfg.source_, line,
                          "duplicate key '" + key + "' (first set on line "
                              + std::to_string(it->second.line) + ")");
      cfg.entries_[key] = { value, line };
    }
    return cfg;
  }

  static Config parse_string(const std::string &text, std::string source = {}) {
    std::istringstream in(text);
    return parse(in, std::move(source));
  }

  const std::string &source() const { return source_; }
  bool has(const std::string &key) const { return entries_.count(key) > 0; }
  const std::map<std::string, Entry> &entries() const { return entries_; }

  /// Adds or replaces a value, e.g. from a command-line override.
  void set(const std::string &key, std::string value) {
    entries_[key] = { std::move(value), 0 };
  }

  const Entry &require(const std::string &key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError(source_, 0, "missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string &key) const {
    return require(key).value;
  }
  std::string get_string(const std::string &key, std::string fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string &key) const {
    const Entry &e = require(key);
    return to_double(key, e);
  }
  double get_double(const std::string &key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::int64_t get_int(const std::string &key) const {
    const Entry &e = require(key);
    std::int64_t v = 0;
    const char *end = e.value.data() + e.value.size();
    auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end)
      throw ConfigError(source_, e.line,
                        "'" + key + "' expects an integer, got '" + e.value + "'");
    return v;
  }
  std::int64_t get_int(const std::string &key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string &key) const {
    const Entry &e = require(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes")
      return true;
    if (e.value == "false" || e.value == "0" || e.value == "no")
      return false;
    throw ConfigError(source_, e.line,
                      "'" + key + "' expects true/false, got '" + e.value + "'");
  }
  bool get_bool(const std::string &key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  /// Comma-separated list.
  std::vector<std::string> get_list(const std::string &key) const {
    const Entry &e = require(key);
    std::vector<std::string> out;
    std::string_view rest(e.value);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      if (item.empty())
        throw ConfigError(source_, e.line, "empty item in list '" + key + "'");
      out.emplace_back(item);
      if (comma == std::string_view::npos)
        break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string &key, const std::string &what) const {
    auto it = entries_.find(key);
    throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, what);
  }

  /// Rejects any key that was never read.
  void check_all_used() const {
    for (const auto &[key, e]: entries_)
      if (!used_.count(key))
        throw ConfigError(source_, e.line, "unknown key '" + key + "'");
  }

  void mark_used(const std::string &key) const {
    if (has(key))
      used_.insert(key);
  }

private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
      s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.remove_suffix(1);
    return s;
  }

  static bool valid_key(const std::string &k) {
    if (k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos)
      return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    });
  }

  double to_double(const std::string &key, const Entry &e) const {
    if (e.value == "inf" || e.value == "+inf")
      return std::numeric_limits<double>::infinity();
    if (e.value == "-inf")
      return -std::numeric_limits<double>::infinity();
    double v = 0;
    const char *end = e.value.data() + e.value.size();
    auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
      throw ConfigError(source_, e.line,
                        "'" + key + "' expects a number, got '" + e.value + "'");
    return v;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

} // namespace pnkhb

#endif // PNKHB_CONFIG_HPP
