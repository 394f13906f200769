#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace facetsearch {

/// Flat key=value run configuration. Lines starting with '#' are comments.
///
///   catalog = data/sample/catalog.jsonl
///   nprobe = 4
///   no_filters = true
///
/// Unknown keys and values of the wrong type raise ConfigError.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text);
  static RunConfig load_file(const std::string& path);
  /// File named by FACETSEARCH_CONFIG, or an empty config when unset.
  static RunConfig from_environment();

  bool has(std::string_view key) const { return values_.contains(std::string(key)); }
  std::optional<std::string> text(std::string_view key) const;
  std::optional<long long> integer(std::string_view key) const;
  std::optional<double> number(std::string_view key) const;
  std::optional<bool> flag(std::string_view key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace facetsearch
