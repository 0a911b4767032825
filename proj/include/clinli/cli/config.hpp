#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace clinli::cli {

/// One config key. Its type is the JSON type of the default; numbers with a
/// fractional default accept any number, integer defaults need non-negative
/// integers.
struct KeySpec {
  std::string key;  // dotted path
  nlohmann::json default_value;
  std::string help;
};

/// Flat key -> value map with typed getters.
class ResolvedConfig {
 public:
  ResolvedConfig() = default;
  explicit ResolvedConfig(std::map<std::string, nlohmann::json> values) : values_(std::move(values)) {}

  const nlohmann::json& at(const std::string& key) const;
  std::string str(const std::string& key) const { return at(key).get<std::string>(); }
  std::size_t uint(const std::string& key) const { return at(key).get<std::size_t>(); }
  double num(const std::string& key) const { return at(key).get<double>(); }
  bool flag(const std::string& key) const { return at(key).get<bool>(); }
  template <typename T>
  std::vector<T> list(const std::string& key) const {
    return at(key).get<std::vector<T>>();
  }

  /// Nested JSON object, the form written as the resolved-config snapshot.
  nlohmann::json nested() const;
  const std::map<std::string, nlohmann::json>& values() const { return values_; }

 private:
  std::map<std::string, nlohmann::json> values_;
};

/// Flattens nested objects into dotted keys (arrays stay values).
std::map<std::string, nlohmann::json> flatten(const nlohmann::json& j, const std::string& prefix = "");

/// Defaults, then `file` (JSON object), then `overrides` of the form
/// key=value where value is parsed as JSON when possible and taken as a string
/// otherwise. Throws ConfigError naming the offending key for unknown keys or
/// type mismatches.
ResolvedConfig resolve_config(const std::vector<KeySpec>& schema, const nlohmann::json& file,
                              const std::vector<std::string>& overrides);

nlohmann::json read_config_file(const std::filesystem::path& path);

}  // namespace clinli::cli
