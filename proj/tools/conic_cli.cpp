#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "conic/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"conic: scattering and dispersive kernels on surfaces of revolution"};
  std::string command, config, out;
  app.add_option("command", command, "describe, potential, jost, coeffs, validate-low, validate-high, kernel, decay, statphase")
      ->required();
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_option("--out", out, "output directory (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (const char* env = std::getenv("CONIC_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v <= 0) throw conic::ConicError("CONIC_THREADS must be a positive integer");
    }
    conic::RunConfig cfg = conic::load_config(config);
    if (cfg.command != conic::parse_command(command))
      throw conic::ConicError("command '" + command + "' does not match the config command '" +
                              conic::command_name(cfg.command) + "'");
    if (!out.empty()) cfg.out_dir = out;
    return conic::run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
