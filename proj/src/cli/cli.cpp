#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "clinli/cli/cli.hpp"
#include "clinli/error.hpp"

namespace clinli::cli {

namespace {

std::string command_list() {
  std::string out;
  for (const auto& c : commands()) out += (out.empty() ? "" : ", ") + c.name;
  return out;
}

}  // namespace

std::string describe(std::string_view name) {
  const Command* cmd = find_command(name);
  if (!cmd) throw ConfigError("describe", "unknown subcommand \"" + std::string(name) + "\"; valid: " + command_list());
  std::ostringstream out;
  out << cmd->name << ": " << cmd->summary << "\n";
  out << "Reproduces: " << cmd->reproduces << "\n\nConfig keys (set with --set key=value or a --config JSON file):\n";
  for (const auto& k : cmd->keys) {
    out << "  " << cmd->name << ":" << k.key << " = " << k.default_value.dump() << "\n";
    out << "      " << k.help << "\n";
  }
  out << "\nArtifacts under --out:\n  resolved_config.json\n";
  for (const auto& a : cmd->artifacts) out << "  " << a << "\n";
  return out.str();
}

nlohmann::json config_schema(std::string_view name) {
  using nlohmann::json;
  const Command* cmd = find_command(name);
  if (!cmd) throw ConfigError("describe", "unknown subcommand \"" + std::string(name) + "\"; valid: " + command_list());
  json root{{"$schema", "https://json-schema.org/draft/2020-12/schema"},
            {"title", "clinli " + cmd->name + " config"},
            {"type", "object"},
            {"additionalProperties", false},
            {"properties", json::object()}};
  for (const auto& k : cmd->keys) {
    json* node = &root;
    std::string rest = k.key;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      json& child = (*node)["properties"][rest.substr(0, dot)];
      if (child.is_null()) child = {{"type", "object"}, {"additionalProperties", false}, {"properties", json::object()}};
      node = &child;
      rest = rest.substr(dot + 1);
    }
    json leaf{{"description", k.help}, {"default", k.default_value}};
    switch (k.default_value.type()) {
      case json::value_t::number_float: leaf["type"] = "number"; break;
      case json::value_t::number_unsigned:
      case json::value_t::number_integer:
        leaf["type"] = "integer";
        leaf["minimum"] = 0;
        break;
      case json::value_t::boolean: leaf["type"] = "boolean"; break;
      case json::value_t::string: leaf["type"] = "string"; break;
      case json::value_t::array: leaf["type"] = "array"; break;
      default: break;
    }
    (*node)["properties"][rest] = leaf;
  }
  return root;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clinical natural language inference toolkit.", "clinli"};
  app.require_subcommand(1);
  app.footer("Run `clinli describe <subcommand>` for its config keys and outputs.");

  std::string describe_name;
  auto* describe_cmd = app.add_subcommand("describe", "Print the config keys and artifacts of a subcommand.");
  describe_cmd->add_option("name", describe_name, "Subcommand; lists all when omitted.");
  bool schema = false;
  describe_cmd->add_flag("--schema", schema, "Print the JSON Schema of the subcommand's config file instead.");

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.summary);
    sub->add_option("--config", config_path, "JSON config file.");
    sub->add_option("--set", overrides, "Override one key, key=value (repeatable).")->allow_extra_args(false);
    sub->add_option("--out", out_dir, "Output directory.")->capture_default_str();
    subs.emplace_back(sub, &c);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "clinli: " << e.what() << "\n";
    return 2;
  }

  try {
    if (describe_cmd->parsed()) {
      if (describe_name.empty()) {
        for (const auto& c : commands()) out << c.name << "  " << c.summary << "\n";
      } else if (schema) {
        out << config_schema(describe_name).dump(2) << "\n";
      } else {
        out << describe(describe_name);
      }
      return 0;
    }
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      const nlohmann::json file = config_path.empty() ? nlohmann::json::object() : read_config_file(config_path);
      RunContext ctx{resolve_config(cmd->keys, file, overrides), out_dir, err};
      std::filesystem::create_directories(ctx.out_dir);
      std::ofstream(ctx.out_dir / "resolved_config.json") << ctx.config.nested().dump(2) << "\n";
      cmd->run(ctx);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "clinli: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "clinli: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace clinli::cli
