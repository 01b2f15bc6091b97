#include "dsen/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dsen {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t ParseU64(const std::string& key, std::string_view text) {
  text = Trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ValidationError(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

ConfigFile ConfigFile::Parse(std::string_view text) {
  ConfigFile cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no),
                            "expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key(Trim(line.substr(0, eq)));
    if (key.empty()) throw ValidationError("line " + std::to_string(line_no), "empty key");
    cfg.values_[key] = std::string(Trim(line.substr(eq + 1)));
  }
  return cfg;
}

ConfigFile ConfigFile::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string ConfigFile::GetString(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::uint64_t ConfigFile::GetU64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : ParseU64(key, it->second);
}

std::size_t ConfigFile::GetSize(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(GetU64(key, fallback));
}

double ConfigFile::GetDouble(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ValidationError(key, "expected a number, got '" + s + "'");
  }
  return v;
}

bool ConfigFile::GetBool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ValidationError(key, "expected true/false, got '" + it->second + "'");
}

std::vector<std::size_t> ParseSizeList(const std::string& key, std::string_view text) {
  std::vector<std::size_t> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(ParseU64(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::vector<std::size_t> ConfigFile::GetSizeList(const std::string& key,
                                                 const std::vector<std::size_t>& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : ParseSizeList(key, it->second);
}

void ConfigFile::RequireKnown(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) throw ValidationError(key, "unknown setting");
  }
}

}  // namespace dsen
