#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rsbandit/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching bandits: simulation, spectral estimation, belief planning and SEEU"};
  app.require_subcommand(1);
  int exit_code = 0;
  rsb::cli::register_commands(app, exit_code);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rsb::Error& e) {
    std::cerr << "error [" << rsb::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
