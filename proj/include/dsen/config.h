#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsen {

// Invalid configuration value; key() names the offending setting.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Flat `key = value` settings. Blank lines and `#` comments are ignored.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile Parse(std::string_view text);
  static ConfigFile Load(const std::string& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  std::size_t GetSize(const std::string& key, std::size_t fallback) const;
  std::uint64_t GetU64(const std::string& key, std::uint64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  // Comma-separated list, e.g. "32,16,8".
  std::vector<std::size_t> GetSizeList(const std::string& key,
                                       const std::vector<std::size_t>& fallback) const;

  // Throws ValidationError for the first key not in `known`.
  void RequireKnown(const std::set<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::size_t> ParseSizeList(const std::string& key, std::string_view text);

}  // namespace dsen
