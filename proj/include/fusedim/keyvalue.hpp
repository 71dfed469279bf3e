#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fusedim/error.hpp"

namespace fusedim {

// Shared plain-text dialect used by calibration files, scene specs and
// pipeline configs:
//
//   # comment
//   [section]
//   key value value ...
//
// Keys may repeat within a section (e.g. one `cuboid` line per object).
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::vector<std::string> values;
    int line = 0;
  };

  static KeyValueFile parse(std::istream& in, const std::string& origin = "<stream>") {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream ls(line);
      std::string tok;
      if (!(ls >> tok)) continue;
      if (tok.front() == '[') {
        if (tok.back() != ']' || tok.size() < 3)
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        section = tok.substr(1, tok.size() - 2);
        kv.sections_[section];  // record even if empty
        continue;
      }
      Entry e;
      e.key = tok;
      e.line = lineno;
      while (ls >> tok) e.values.push_back(tok);
      kv.sections_[section].push_back(std::move(e));
    }
    return kv;
  }

  static KeyValueFile parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open config file " + path.string());
    return parse(in, path.string());
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& e : it->second)
      if (e.key == key) return &e;
    return nullptr;
  }

  std::vector<const Entry*> find_all(const std::string& section, const std::string& key) const {
    std::vector<const Entry*> out;
    auto it = sections_.find(section);
    if (it == sections_.end()) return out;
    for (const auto& e : it->second)
      if (e.key == key) out.push_back(&e);
    return out;
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    return to_number(*e, 0);
  }

  double require_number(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(origin_ + ": missing key '" + key + "' in [" + section + "]");
    return to_number(*e, 0);
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return {};
    std::vector<double> out;
    out.reserve(e->values.size());
    for (std::size_t i = 0; i < e->values.size(); ++i) out.push_back(to_number(*e, i));
    return out;
  }

  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback = "") const {
    const Entry* e = find(section, key);
    if (!e || e->values.empty()) return fallback;
    return e->values[0];
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e || e->values.empty()) return fallback;
    const std::string& v = e->values[0];
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": boolean expected for '" +
                      key + "', got '" + v + "'");
  }

  const std::string& origin() const { return origin_; }

 private:
  double to_number(const Entry& e, std::size_t idx) const {
    if (idx >= e.values.size())
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + e.key +
                        "' is missing a value");
    try {
      std::size_t used = 0;
      double v = std::stod(e.values[idx], &used);
      if (used != e.values[idx].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + e.values[idx] +
                        "' is not a number (key '" + e.key + "')");
    }
  }

  std::map<std::string, std::vector<Entry>> sections_;
  std::string origin_ = "<stream>";
};

}  // namespace fusedim
