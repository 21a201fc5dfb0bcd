#pragma once

#include <CLI11.hpp>

namespace rsb::cli {

/// Registers every subcommand on `app`. Each subcommand's callback sets
/// `exit_code`.
void register_commands(CLI::App& app, int& exit_code);

}  // namespace rsb::cli
