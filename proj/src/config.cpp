#include "jinv/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/program_options/options_description.hpp>
#include <boost/program_options/parsers.hpp>

#include "jinv/errors.hpp"

namespace jinv {

namespace po = boost::program_options;

FlatConfig FlatConfig::parse(std::istream& is, const std::string& source) {
  FlatConfig cfg;
  cfg.source_ = source;
  po::parsed_options parsed(nullptr);
  try {
    parsed = po::parse_config_file(is, po::options_description(), true);
  } catch (const po::error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  for (const auto& opt : parsed.options) {
    const std::string& key = opt.string_key;
    if (opt.value.empty() || opt.value.front().empty()) throw ConfigError(source + ": key '" + key + "' has no value");
    if (!cfg.values_.emplace(key, opt.value.front()).second)
      throw ConfigError(source + ": duplicate key '" + key + "'");
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse(is, path.string());
}

std::string FlatConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key) const { return raw(key); }

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double FlatConfig::get_double(const std::string& key) const {
  const std::string s = raw(key);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(source_ + ": key '" + key + "' expects a finite number, got '" + s + "'");
  return v;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::optional<double> FlatConfig::get_optional_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key);
}

int FlatConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string s = raw(key);
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError(source_ + ": key '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

std::uint64_t FlatConfig::get_uint64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = raw(key);
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError(source_ + ": key '" + key + "' expects an unsigned integer, got '" + s + "'");
  return v;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = raw(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(source_ + ": key '" + key + "' expects true or false, got '" + s + "'");
}

std::vector<std::string> FlatConfig::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = values_.lower_bound(prefix); it != values_.end() && it->first.rfind(prefix, 0) == 0; ++it)
    out.push_back(it->first);
  return out;
}

void FlatConfig::check_unused() const {
  std::string bad;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) bad += (bad.empty() ? "" : ", ") + k;
  if (!bad.empty()) throw ConfigError(source_ + ": unknown keys: " + bad);
}

}  // namespace jinv
