// simulate <config-path> [--out DIR] [--parallel N] [--log-level L]
//
// Exit status: 0 all experiments succeeded, 1 a solve or analysis failed,
// 2 the configuration is unreadable or invalid, 3 output could not be written.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ldsim/config.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/run.hpp"

namespace {

constexpr int exit_failure = 1;
constexpr int exit_config = 2;
constexpr int exit_io = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D electro-thermal drift-diffusion simulator for LDMOS self-heating studies"};
  std::string config_path, out_dir, log_level = "info";
  int parallel = 1;
  app.add_option("config", config_path, "JSON run plan")->required();
  app.add_option("--out", out_dir, "output directory (overrides the plan and LDSIM_OUTPUT_DIR)");
  app.add_option("--parallel", parallel, "experiments solved concurrently")
      ->check(CLI::PositiveNumber)
      ->default_val(1);
  const std::map<std::string, spdlog::level::level_enum> levels{
      {"trace", spdlog::level::trace}, {"debug", spdlog::level::debug}, {"info", spdlog::level::info},
      {"warn", spdlog::level::warn},   {"error", spdlog::level::err},   {"off", spdlog::level::off}};
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->default_val("info");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  ldsim::RunPlan plan;
  try {
    plan = ldsim::load_config(config_path);
  } catch (const ldsim::ConfigError& e) {
    std::cerr << "simulate: " << config_path << ": " << e.what() << "\n";
    return exit_config;
  }

  ldsim::RunOptions opt;
  opt.parallel = parallel;
  opt.log_level = levels.at(log_level);
  if (!out_dir.empty()) opt.output_dir = out_dir;
  else if (!plan.output_dir.empty()) opt.output_dir = plan.output_dir;
  else if (const char* env = std::getenv("LDSIM_OUTPUT_DIR"); env != nullptr && *env != '\0')
    opt.output_dir = env;

  try {
    const ldsim::RunOutcome outcome = ldsim::run(plan, opt);
    if (!outcome.ok()) {
      std::cerr << "simulate: " << outcome.first_failure() << "\n";
      return exit_failure;
    }
    return 0;
  } catch (const ldsim::IoError& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return exit_io;
  } catch (const ldsim::ConfigError& e) {
    std::cerr << "simulate: " << config_path << ": " << e.what() << "\n";
    return exit_config;
  } catch (const ldsim::Error& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return exit_failure;
  }
}
