#include "textclf/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "textclf/errors.hpp"

namespace textclf {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_string(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    cfg.entries_[full] = value;
  }
  return cfg;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string RunConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not an integer");
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': '" + it->second + "' is not a boolean");
}

void RunConfig::reject_unknown(const std::vector<std::string>& known) const {
  std::vector<std::string> bad;
  for (const auto& [key, value] : entries_) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) bad.push_back(key);
  }
  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    std::string msg = "unknown config key(s):";
    for (const std::string& k : bad) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
}

}  // namespace textclf
