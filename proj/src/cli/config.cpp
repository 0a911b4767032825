#include "clinli/cli/config.hpp"

#include <algorithm>
#include <fstream>

#include "clinli/error.hpp"

namespace clinli::cli {

using nlohmann::json;

const json& ResolvedConfig::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "not a key of this command");
  return it->second;
}

json ResolvedConfig::nested() const {
  json out = json::object();
  for (const auto& [key, value] : values_) {
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    out[json::json_pointer(pointer)] = value;
  }
  return out;
}

std::map<std::string, json> flatten(const json& j, const std::string& prefix) {
  std::map<std::string, json> out;
  if (!j.is_object()) {
    out[prefix] = j;
    return out;
  }
  if (j.empty() && !prefix.empty()) out[prefix] = j;
  for (auto& [key, value] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    for (auto& kv : flatten(value, full)) out.insert(std::move(kv));
  }
  return out;
}

namespace {

bool type_matches(const json& default_value, const json& value) {
  switch (default_value.type()) {
    case json::value_t::number_float: return value.is_number();
    case json::value_t::number_unsigned:
    case json::value_t::number_integer: return value.is_number_unsigned();
    case json::value_t::boolean: return value.is_boolean();
    case json::value_t::string: return value.is_string();
    case json::value_t::array: return value.is_array();
    default: return value.type() == default_value.type();
  }
}

std::string type_name(const json& default_value) {
  switch (default_value.type()) {
    case json::value_t::number_float: return "a number";
    case json::value_t::number_unsigned:
    case json::value_t::number_integer: return "a non-negative integer";
    case json::value_t::boolean: return "true or false";
    case json::value_t::string: return "a string";
    case json::value_t::array: return "an array";
    default: return default_value.type_name();
  }
}

void assign(std::map<std::string, json>& values, const std::vector<KeySpec>& schema, const std::string& key,
            const json& value) {
  const KeySpec* spec = nullptr;
  for (const auto& k : schema)
    if (k.key == key) spec = &k;
  if (!spec) throw ConfigError(key, "unknown config key \"" + key + "\"");
  if (!type_matches(spec->default_value, value))
    throw ConfigError(key, "expected " + type_name(spec->default_value) + ", got " + value.dump());
  values[key] = value;
}

}  // namespace

ResolvedConfig resolve_config(const std::vector<KeySpec>& schema, const json& file,
                              const std::vector<std::string>& overrides) {
  std::map<std::string, json> values;
  for (const auto& k : schema) values[k.key] = k.default_value;
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("<config>", "config file must hold a JSON object");
    for (const auto& [key, value] : flatten(file)) assign(values, schema, key, value);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(o, "override must look like key=value");
    const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    const bool wants_string = std::any_of(schema.begin(), schema.end(), [&](const KeySpec& k) {
      return k.key == key && k.default_value.is_string();
    });
    if (value.is_discarded() || wants_string) value = text;
    assign(values, schema, key, value);
  }
  return ResolvedConfig(std::move(values));
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("--config", path.string() + " is not valid JSON");
  return j;
}

}  // namespace clinli::cli
