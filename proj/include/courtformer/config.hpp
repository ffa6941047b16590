#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace courtformer {

// Flat `key = value` settings. Blank lines and lines starting with `#` are
// skipped. Later assignments override earlier ones.
class Settings {
 public:
  static Settings parse(std::istream& in, const std::string& source);
  static Settings load(const std::string& path);

  // Applies a `key=value` override.
  void assign(const std::string& assignment);
  void set(const std::string& key, std::string value);
  void merge(const Settings& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

  // Throws ConfigError naming every key that is set but not in `known`.
  void reject_unknown(const std::set<std::string>& known, const std::string& context) const;

  // Keys that start with `prefix`, with the prefix stripped.
  Settings with_prefix(const std::string& prefix) const;

  std::string to_text() const;

 private:
  std::optional<std::string> find(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

std::string format_double(double v);

}  // namespace courtformer
