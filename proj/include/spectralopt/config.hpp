#pragma once

#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spectralopt::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// INI-style key=value file with [section] headers, '#' comments and strict
// key checking: every key present in the file must be consumed by a getter,
// otherwise reject_unknown() names the stray key.
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse(std::istream& is, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& def) const;
  double get_double(const std::string& section, const std::string& key,
                    double def) const;
  int get_int(const std::string& section, const std::string& key, int def) const;
  bool get_bool(const std::string& section, const std::string& key, bool def) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      const std::vector<double>& def) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                const std::vector<int>& def) const;
  // Comma-separated RxC shapes, e.g. "2x2,4x6,8x8".
  std::vector<std::pair<int, int>> get_size_list(
      const std::string& section, const std::string& key,
      const std::vector<std::pair<int, int>>& def) const;

  void reject_unknown() const;

 private:
  std::string fetch(const std::string& section, const std::string& key) const;

  std::string origin_ = "<defaults>";
  std::map<std::string, std::string> values_;       // "section.key" -> value
  mutable std::set<std::string> consumed_;
};

}  // namespace spectralopt::config
