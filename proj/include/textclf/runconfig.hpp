#pragma once

#include <map>
#include <string>
#include <vector>

namespace textclf {

// Flat INI-style run configuration: "key = value" lines grouped under
// "[section]" headers; keys are addressed as "section.key". '#' and ';' start
// comments. Unknown keys are rejected at validation time so typos fail fast
// instead of silently falling back to defaults.
class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  // Getters raise ConfigError naming the key on absence or a bad value.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;  // true/false/1/0/yes/no

  // Raises ConfigError listing every key not in `known` (sorted).
  void reject_unknown(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace textclf
