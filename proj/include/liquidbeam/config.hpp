#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "liquidbeam/errors.hpp"
#include "liquidbeam/io.hpp"

namespace lb {

/// Sectioned key=value configuration. '#' starts a comment; keys live under
/// the most recent [section] header. Every key must be consumed by some
/// module; leftovers are hard errors so typos cannot silently change runs.
class ConfigFile {
 public:
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>") {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (!cfg.values_[section].emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                          qualified(section, key) + "'");
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    return parse_string(read_text_file(path), path);
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    auto sec = values_.find(section);
    if (sec == values_.end()) return std::nullopt;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return std::nullopt;
    consumed_.insert(qualified(section, key));
    return it->second;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    auto v = raw(section, key);
    return v ? parse_double(*v) : fallback;
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    auto v = raw(section, key);
    return v ? parse_u64(*v) : fallback;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = raw(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("key '" + qualified(section, key) + "': expected a boolean, got '" + *v +
                      "'");
  }

  /// Semicolon-separated list of numbers, e.g. "0; 2; 4".
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      std::vector<double> fallback) const {
    auto v = raw(section, key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v, ';')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(parse_double(t));
    }
    if (out.empty())
      throw ConfigError("key '" + qualified(section, key) + "': empty list");
    return out;
  }

  /// Remaining keys that no module asked for. Call once all consumers ran.
  void ensure_fully_consumed() const {
    std::vector<std::string> leftover;
    for (const auto& [section, kv] : values_)
      for (const auto& [key, value] : kv)
        if (consumed_.find(qualified(section, key)) == consumed_.end())
          leftover.push_back(qualified(section, key));
    if (!leftover.empty()) {
      std::string msg = origin_ + ": unknown key(s):";
      for (const auto& k : leftover) msg += " '" + k + "'";
      throw ConfigError(msg);
    }
  }

  /// Resolved view for run_meta emission.
  std::string describe() const {
    std::string out;
    for (const auto& [section, kv] : values_) {
      out += "[" + section + "]\n";
      for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  }

 private:
  static std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace lb
