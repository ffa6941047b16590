#include "courtformer/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "courtformer/errors.hpp"

namespace courtformer {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("setting '" + key + "' expects a number, got '" + text + "'");
  }
  return out;
}

}  // namespace

Settings Settings::parse(std::istream& in, const std::string& source) {
  Settings out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    out.values_[key] = trim(body.substr(eq + 1));
  }
  return out;
}

Settings Settings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse(in, path);
}

void Settings::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

void Settings::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void Settings::merge(const Settings& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> Settings::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Settings::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

std::int64_t Settings::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = find(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::uint64_t Settings::get_uint(const std::string& key, std::uint64_t fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (!v->empty() && v->front() == '-') throw ConfigError("setting '" + key + "' must be non-negative");
  return parse_number<std::uint64_t>(key, *v);
}

double Settings::get_double(const std::string& key, double fallback) const {
  auto v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("setting '" + key + "' expects true or false, got '" + *v + "'");
}

std::vector<std::size_t> Settings::get_sizes(const std::string& key,
                                             const std::vector<std::size_t>& fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  std::stringstream ss(*v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_number<std::size_t>(key, trim(part)));
  if (out.empty()) throw ConfigError("setting '" + key + "' expects a comma-separated list");
  return out;
}

void Settings::reject_unknown(const std::set<std::string>& known, const std::string& context) const {
  std::string bad;
  for (const auto& [k, v] : values_) {
    if (!known.count(k)) bad += (bad.empty() ? "" : ", ") + k;
  }
  if (!bad.empty()) throw ConfigError("unknown " + context + " setting(s): " + bad);
}

Settings Settings::with_prefix(const std::string& prefix) const {
  Settings out;
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0) out.values_[k.substr(prefix.size())] = v;
  }
  return out;
}

std::string Settings::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace courtformer
