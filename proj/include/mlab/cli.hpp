#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlab {

// Exit codes of the command-line front end.
constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

// JSON schema (draft-04) for experiment configs.
const std::string& config_schema();

// Parses and validates a config document; throws ConfigError with a JSON
// pointer to the offending value.
void validate_config_text(const std::string& text);

// args excludes the program name. Messages go to `out` / `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace mlab
