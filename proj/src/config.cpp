#include "spectralopt/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace spectralopt::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

double parse_double(const std::string& text, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  }
  if (pos != text.size()) {
    throw ConfigError(where + ": trailing characters in number '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& where) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + text + "'");
  }
  if (pos != text.size()) {
    throw ConfigError(where + ": trailing characters in integer '" + text + "'");
  }
  return v;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in, path);
}

Config Config::parse(std::istream& is, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty()) {
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    }
    const std::string full = section + "." + key;
    if (cfg.values_.count(full)) {
      throw ConfigError(where + ": duplicate key '" + full + "'");
    }
    cfg.values_[full] = trim(line.substr(eq + 1));
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string Config::fetch(const std::string& section, const std::string& key) const {
  const std::string full = section + "." + key;
  consumed_.insert(full);
  return values_.at(full);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& def) const {
  return has(section, key) ? fetch(section, key) : def;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double def) const {
  if (!has(section, key)) return def;
  return parse_double(fetch(section, key), origin_ + " [" + section + "] " + key);
}

int Config::get_int(const std::string& section, const std::string& key, int def) const {
  if (!has(section, key)) return def;
  return parse_int(fetch(section, key), origin_ + " [" + section + "] " + key);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool def) const {
  if (!has(section, key)) return def;
  const std::string v = fetch(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + " [" + section + "] " + key +
                    ": expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key,
                                            const std::vector<double>& def) const {
  if (!has(section, key)) return def;
  const std::string where = origin_ + " [" + section + "] " + key;
  const std::string raw = fetch(section, key);
  if (trim(raw).empty()) return {};
  std::vector<double> out;
  for (const std::string& part : split(raw, ',')) {
    out.push_back(parse_double(part, where));
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section,
                                      const std::string& key,
                                      const std::vector<int>& def) const {
  if (!has(section, key)) return def;
  const std::string where = origin_ + " [" + section + "] " + key;
  const std::string raw = fetch(section, key);
  if (trim(raw).empty()) return {};
  std::vector<int> out;
  for (const std::string& part : split(raw, ',')) {
    out.push_back(parse_int(part, where));
  }
  return out;
}

std::vector<std::pair<int, int>> Config::get_size_list(
    const std::string& section, const std::string& key,
    const std::vector<std::pair<int, int>>& def) const {
  if (!has(section, key)) return def;
  const std::string where = origin_ + " [" + section + "] " + key;
  const std::string raw = fetch(section, key);
  if (trim(raw).empty()) return {};
  std::vector<std::pair<int, int>> out;
  for (const std::string& part : split(raw, ',')) {
    const std::size_t x = part.find('x');
    if (x == std::string::npos) {
      throw ConfigError(where + ": expected RxC shape, got '" + part + "'");
    }
    out.emplace_back(parse_int(trim(part.substr(0, x)), where),
                     parse_int(trim(part.substr(x + 1)), where));
  }
  return out;
}

void Config::reject_unknown() const {
  for (const auto& [full, value] : values_) {
    if (!consumed_.count(full)) {
      throw ConfigError(origin_ + ": unknown config key '" + full + "'");
    }
  }
}

}  // namespace spectralopt::config
