#pragma once

#include <map>
#include <string>
#include <vector>

#include "kresling/error.hpp"

namespace kresling {

/// Flat section.key = value store with an INI-like text form:
///
///   # comment
///   [drive]
///   freq = 5
///
/// Keys keep their insertion-independent sorted order so text round-trips exactly.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);
  void set(const std::string& key, const std::vector<double>& values);
  /// Overlay every key of other onto this.
  void merge(const Config& other);

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  bool operator==(const Config& o) const { return values_ == o.values_; }

  /// FNV-1a of the serialized text, hex encoded.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Named parameter sets: single5hz, chain, dual.
Config preset(const std::string& name);
std::vector<std::string> preset_names();

/// Shortest text that parses back to exactly v.
std::string format_double(double v);

}  // namespace kresling
