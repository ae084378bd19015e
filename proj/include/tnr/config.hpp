// Human-editable `key = value` configuration with `[section]` headers.
//
//   # comment
//   [train]
//   batch_size = 64
//   learning_rate = 1e-4
//
// Unknown keys are rejected by the consumers through `check_keys`, so a typo
// fails loudly instead of silently falling back to a default.

#ifndef TNR_CONFIG_HPP_
#define TNR_CONFIG_HPP_

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

class ConfigFile {
 public:
  using Section = std::map<std::string, std::string>;

  static ConfigFile parse(std::istream& is, const std::string& origin = "config") {
    ConfigFile cfg;
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": unterminated section header");
        current = detail::trim(line.substr(1, line.size() - 2));
        if (current.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": empty section name");
        cfg.touch(current);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.touch(current);
      cfg.sections_[current][key] = value;
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path + "'");
    return parse(is, path);
  }

  static ConfigFile from_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  bool has_section(const std::string& s) const { return sections_.count(s); }

  bool has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key);
  }

  /// Section names in file order.
  const std::vector<std::string>& section_names() const { return order_; }

  const Section& section(const std::string& s) const {
    static const Section kEmpty;
    auto it = sections_.find(s);
    return it == sections_.end() ? kEmpty : it->second;
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    touch(section);
    sections_[section][key] = value;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? section_value(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    return to_double(section, key, section_value(section, key));
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = section_value(section, key);
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError("[" + section + "] " + key + ": '" + v +
                        "' is not an integer");
    return out;
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = section_value(section, key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": '" + v +
                      "' is not a boolean");
  }

  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key,
                                  std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<double> out;
    for (const auto& item : detail::split(section_value(section, key), ','))
      out.push_back(to_double(section, key, item));
    return out;
  }

  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            std::vector<int> fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<int> out;
    for (const auto& item : detail::split(section_value(section, key), ',')) {
      int v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size())
        throw ConfigError("[" + section + "] " + key + ": '" + item +
                          "' is not an integer");
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const {
    if (!has(section, key)) return {};
    return detail::split(section_value(section, key), ',');
  }

  /// Throws on any key in `section` that is not in `known`.
  void check_keys(const std::string& name,
                  const std::set<std::string>& known) const {
    for (const auto& [k, _] : section(name))
      if (!known.count(k))
        throw ConfigError("unknown config key '" + k + "' in section [" +
                          name + "]");
  }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& name : order_) {
      if (!name.empty()) os << "[" << name << "]\n";
      for (const auto& [k, v] : sections_.at(name)) os << k << " = " << v << "\n";
      os << "\n";
    }
    return os.str();
  }

 private:
  void touch(const std::string& s) {
    if (!sections_.count(s)) {
      sections_[s];
      order_.push_back(s);
    }
  }

  std::string section_value(const std::string& s, const std::string& k) const {
    return sections_.at(s).at(k);
  }

  static double to_double(const std::string& section, const std::string& key,
                          const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + ": '" + v +
                        "' is not a number");
    }
  }

  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

}  // namespace tnr

#endif  // TNR_CONFIG_HPP_
