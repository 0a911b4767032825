#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "clinli/cli/config.hpp"

namespace clinli::cli {

struct RunContext {
  ResolvedConfig config;
  std::filesystem::path out_dir;
  std::ostream& log;
};

struct Command {
  std::string name;
  std::string summary;
  std::string reproduces;
  std::vector<KeySpec> keys;
  std::vector<std::string> artifacts;
  std::function<void(const RunContext&)> run;
};

const std::vector<Command>& commands();
const Command* find_command(std::string_view name);

/// Help text for one subcommand, generated from its key schema. Keys are
/// printed qualified as `<subcommand>:<key>`. Throws ConfigError listing the
/// valid names for an unknown subcommand.
std::string describe(std::string_view name);

/// JSON Schema (draft 2020-12) of the nested config file a subcommand accepts.
nlohmann::json config_schema(std::string_view name);

/// Full command line without the program name. Exit codes: 0 success,
/// 1 runtime failure, 2 usage or config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace clinli::cli
