#pragma once

#include "fbmlab/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fbmlab {

/// Raised for malformed or incomplete configs (CLI exit code 2).
class ValidationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Sectioned key-value text:
///
///   # comment
///   [experiment]
///   name = lnd-constant
///   seed = 7
///
/// Keys are unique within a section; values are raw strings, lists are
/// comma separated.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  const std::string& raw(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
  int integer(const std::string& section, const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& section, const std::string& key) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;
  std::vector<int> integers(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return sections_; }
  std::vector<std::string> keys(const std::string& section) const;

  /// Sorted "section.key=value" lines; the input of the config digest.
  std::string canonical() const;
  std::string digest() const;
  const std::string& origin() const { return origin_; }

  /// Throws ValidationError listing unknown and missing keys of `section`.
  void require_exact_keys(const std::string& section, const std::vector<std::string>& expected) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

}  // namespace fbmlab
