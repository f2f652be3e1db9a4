#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/errors.hpp"

namespace leangate {

/// One documented configuration key.
struct KeySpec {
  std::string name;  // file form, e.g. "n_pairs"; flag form is "--n-pairs"
  std::string default_value;
  std::string help;

  std::string flag() const {
    std::string f = "--" + name;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
  }
};

/// Resolved key=value configuration over a fixed key registry.
class RunConfig {
 public:
  explicit RunConfig(std::vector<KeySpec> keys) : keys_(std::move(keys)) {
    for (const auto& k : keys_) values_[k.name] = k.default_value;
  }

  const std::vector<KeySpec>& keys() const { return keys_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  bool known(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  /// Applies "key = value" lines; '#' starts a comment.
  void apply_text(const std::string& text, const std::string& origin = "config") {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
      }
      const std::string key = trim(t.substr(0, eq));
      if (!known(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
      values_[key] = trim(t.substr(eq + 1));
    }
  }

  void apply_file(const std::string& path) {
    std::string text;
    try {
      text = io::read_file(path);
    } catch (const DataError&) {
      throw ConfigError("cannot read config file " + path);
    }
    apply_text(text, path);
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    std::istringstream ss(s);
    double v = 0.0;
    ss >> v;
    if (ss.fail() || !ss.eof()) throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
  }

  template <typename Int = long long>
  Int integer(const std::string& key) const {
    const std::string& s = str(key);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError(key + ": expected an integer, got '" + s + "'");
    }
    return v;
  }

  int int32(const std::string& key) const { return integer<int>(key); }
  std::uint64_t u64(const std::string& key) const { return integer<std::uint64_t>(key); }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + s + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::vector<KeySpec> keys_;
  std::map<std::string, std::string> values_;
};

}  // namespace leangate
