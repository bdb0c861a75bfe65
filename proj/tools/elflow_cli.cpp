#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>

#include "elflow/errors.hpp"
#include "elflow/harness.hpp"

namespace {

/// Machine-readable error line on stderr.
int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eulerian-Lagrangian and classical Navier-Stokes experiments on the periodic box"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::function<int(const elflow::RunConfig&)> fn;
  };
  const Command commands[] = {
      {"run", "integrate one configuration", elflow::command_run},
      {"compare", "run a pair of configurations, or two stored runs, and compare velocities", elflow::command_compare},
      {"verify-identities", "check the Eulerian-Lagrangian identities", elflow::command_verify_identities},
      {"bounds-report", "evaluate the energy and displacement bounds along an EL run", elflow::command_bounds_report},
      {"pair-dispersion", "Monte-Carlo pair dispersion along an EL run", elflow::command_pair_dispersion},
  };

  std::string config_path, out_dir;
  const Command* chosen = nullptr;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir in the config)");
    sub->callback([&chosen, &c] { chosen = &c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(elflow::kExitConfig, "usage", e.what());
  }

  try {
    elflow::RunConfig config = elflow::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    const int code = chosen->fn(config);
    std::cout << nlohmann::json{{"command", chosen->name},
                                {"exit_code", code},
                                {"output_dir", config.output_dir.string()}}
                     .dump()
              << "\n";
    return code;
  } catch (const elflow::ConfigError& e) {
    return fail(elflow::kExitConfig, "config", e.what());
  } catch (const elflow::Error& e) {
    return fail(elflow::kExitSolver, "solver", e.what());
  } catch (const std::exception& e) {
    return fail(elflow::kExitSolver, "internal", e.what());
  }
}
