#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermo::config {

/// One non-blank, non-comment line of a declarative config file.
///
/// Two line shapes are accepted:
///   key = value                       -> a scalar setting
///   <kind> <name> k1=v1 k2=v2 ...     -> a record (node, edge, element, ...)
/// `#` starts a comment anywhere on a line.
struct Record {
  std::string kind;
  std::vector<std::string> positional;
  std::map<std::string, std::string> fields;
  std::string file;
  std::size_t line = 0;

  std::string where() const { return file + ":" + std::to_string(line); }

  bool has(const std::string& key) const { return fields.count(key) != 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  std::vector<std::string> list(const std::string& key) const;
  /// Throws ConfigError naming this record's location.
  [[noreturn]] void error(const std::string& message) const;
};

struct Document {
  std::map<std::string, std::string> settings;
  std::map<std::string, std::size_t> setting_lines;
  std::vector<Record> records;
  std::string file;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::optional<std::string> get(const std::string& key) const;
  /// Two numbers separated by whitespace, e.g. `ambient_range = 288 298`.
  std::pair<double, double> range_or(const std::string& key, std::pair<double, double> fallback) const;
  std::vector<const Record*> of_kind(const std::string& kind) const;
};

Document parse(const std::string& text, const std::string& file_label);
Document load(const std::filesystem::path& path);

}  // namespace thermo::config
