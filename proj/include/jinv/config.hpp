#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jinv {

/// Flat "key = value" configuration with '#' comments and dotted keys.
///
/// Getters record which keys were read so that unused (misspelled) keys can
/// be reported by check_unused(). Every parse or conversion problem throws
/// ConfigError.
class FlatConfig {
 public:
  static FlatConfig parse(std::istream& is, const std::string& source = "<config>");
  static FlatConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void erase(const std::string& key) { values_.erase(key); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys starting with prefix, in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Throws ConfigError naming every key that no getter has read.
  void check_unused() const;

  const std::string& source() const { return source_; }

 private:
  std::string raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string source_;
};

}  // namespace jinv
