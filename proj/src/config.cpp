#include "fbmlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbmlab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + t + "' is not a number");
  }
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      if (cfg.sections_.count(section)) throw ValidationError(where + ": duplicate section [" + section + "]");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    if (section.empty()) throw ValidationError(where + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (value.empty()) throw ValidationError(where + ": empty value for '" + key + "'");
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
    sec[key] = value;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

const std::string& Config::raw(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) throw ValidationError("missing section [" + section + "]");
  auto kt = it->second.find(key);
  if (kt == it->second.end()) throw ValidationError("missing key '" + key + "' in [" + section + "]");
  return kt->second;
}

double Config::number(const std::string& section, const std::string& key) const {
  return parse_double(raw(section, key), section + "." + key);
}

int Config::integer(const std::string& section, const std::string& key) const {
  const double v = number(section, key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ValidationError(section + "." + key + " must be an integer");
  return static_cast<int>(v);
}

std::uint64_t Config::unsigned_integer(const std::string& section, const std::string& key) const {
  const std::string t = trim(raw(section, key));
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ValidationError(section + "." + key + " must be a nonnegative integer");
  return v;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(raw(section, key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, section + "." + key));
  if (out.empty()) throw ValidationError(section + "." + key + " is an empty list");
  return out;
}

std::vector<int> Config::integers(const std::string& section, const std::string& key) const {
  std::vector<int> out;
  for (double v : numbers(section, key)) {
    if (v != std::floor(v)) throw ValidationError(section + "." + key + " must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [sec, kv] : sections_)
    for (const auto& [k, v] : kv) os << sec << "." << k << "=" << v << "\n";
  return os.str();
}

std::string Config::digest() const {
  Digest d;
  d.update(canonical());
  return d.hex();
}

void Config::require_exact_keys(const std::string& section, const std::vector<std::string>& expected) const {
  std::vector<std::string> missing, unknown;
  const auto have = keys(section);
  for (const auto& k : expected)
    if (std::find(have.begin(), have.end(), k) == have.end()) missing.push_back(k);
  for (const auto& k : have)
    if (std::find(expected.begin(), expected.end(), k) == expected.end()) unknown.push_back(k);
  if (missing.empty() && unknown.empty()) return;
  std::ostringstream os;
  os << "[" << section << "]:";
  if (!unknown.empty()) {
    os << " unknown keys";
    for (const auto& k : unknown) os << " '" << k << "'";
    os << ";";
  }
  if (!missing.empty()) {
    os << " missing keys";
    for (const auto& k : missing) os << " '" << k << "'";
    os << ";";
  }
  throw ValidationError(os.str());
}

}  // namespace fbmlab
