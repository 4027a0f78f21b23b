/// @file nematic.cpp
/// @brief `nematic <subcommand> --config <path> [--seed N] [--output DIR]`.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "nematic/cli.hpp"

namespace {

/// NEMATIC_THREADS caps internal parallelism; the kernels are serial, so it is only validated.
bool threads_env_ok() {
  const char* v = std::getenv("NEMATIC_THREADS");
  if (!v) return true;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) {
    std::cerr << "NEMATIC_THREADS must be a positive integer, got '" << v << "'\n";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nematic liquid-crystal flow solver with boundary control of the director"};
  app.require_subcommand(1, 1);
  std::string config_path, output;
  std::uint64_t seed = 0;
  for (const std::string& name : nematic::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat section.key = value file")->required();
    sub->add_option("--seed", seed, "overrides the seed key");
    sub->add_option("--output", output, "overrides output.directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nematic::kUsageError;
  }
  if (!threads_env_ok()) return nematic::kUsageError;

  const std::string name = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  nematic::RunConfig cfg;
  try {
    cfg = nematic::parse_config(config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--output")) cfg.output_dir = output;
  } catch (const nematic::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return nematic::kUsageError;
  }
  return nematic::run_subcommand(name, cfg);
}
