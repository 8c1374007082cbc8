// tunnelshock command line: scenario in, CSV files and a manifest out.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tunnelshock/errors.hpp"
#include "tunnelshock/parallel.hpp"
#include "tunnelshock_cli/run.hpp"
#include "tunnelshock_cli/scenario.hpp"

namespace {

constexpr int kUsage = 64;
constexpr int kNoInput = 66;

}  // namespace

int main(int argc, char** argv) {
  using namespace tunnelshock;
  using namespace tunnelshock::cli;

  CLI::App app{"Tunnel asymptotics of Kolmogorov-Feller equations with delta-shock densities"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string scenario_path;
  std::string preset_name;
  std::string out_dir;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool list = false;
  auto* scenario_opt = app.add_option("--scenario", scenario_path, "Scenario file (INI)");
  auto* preset_opt = app.add_option("--preset", preset_name, "Built-in scenario name");
  scenario_opt->excludes(preset_opt);
  app.add_option("--out", out_dir, "Output directory (default: the scenario's [output] dir)");
  app.add_option("--threads", threads, "Worker threads (default: TUNNELSHOCK_THREADS, else 1)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed of the test-function placement");
  app.add_flag("--list-presets", list, "Print the built-in scenario names");

  std::vector<std::pair<CLI::App*, Command>> commands;
  commands.emplace_back(app.add_subcommand("evolve", "Fan, essential solution and density"), Command::evolve);
  commands.emplace_back(app.add_subcommand("singularity", "First focal point (t*, x*)"), Command::singularity);
  commands.emplace_back(app.add_subcommand("shock", "Shock paths, amplitudes and merges"), Command::shock);
  commands.emplace_back(app.add_subcommand("verify", "Integral-identity suite"), Command::verify);
  auto* oracle = app.add_subcommand("oracle", "Independent reference solvers");
  commands.emplace_back(oracle, Command::oracle);
  commands.emplace_back(app.add_subcommand("limit-study", "Regularized characteristics as epsilon -> 0"),
                        Command::limit_study);
  std::string kind;
  oracle->add_option("--kind", kind, "hopf-lax | godunov | kf-lattice | tunnel-compare")
      ->required()
      ->check(CLI::IsMember({"hopf-lax", "godunov", "kf-lattice", "tunnel-compare"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  if (list) {
    for (const auto& n : preset_names()) std::cout << n << '\n';
    return 0;
  }
  const CLI::App* chosen = nullptr;
  Command command = Command::evolve;
  for (const auto& [sub, c] : commands) {
    if (sub->parsed()) {
      chosen = sub;
      command = c;
    }
  }
  if (!chosen) {
    std::cerr << app.help();
    return kUsage;
  }
  if (scenario_path.empty() && preset_name.empty()) {
    std::cerr << "error: --scenario or --preset is required\n";
    return kUsage;
  }

  RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  if (seed_opt->count() > 0) options.seed = seed;
  if (command == Command::oracle) options.oracle = *parse_oracle(kind);
  options.argv.assign(argv, argv + argc);
  if (threads > 0) set_default_threads(threads);

  try {
    Scenario sc;
    if (!preset_name.empty()) {
      sc = preset(preset_name);
    } else {
      if (!std::filesystem::is_regular_file(scenario_path)) {
        std::cerr << fmt::format("error: cannot read scenario file '{}'\n", scenario_path);
        return kNoInput;
      }
      sc = load_scenario(scenario_path);
    }
    const RunResult r = run(command, sc, options);
    for (const auto& [k, v] : r.summary) std::cout << fmt::format("{} = {:.17g}\n", k, v);
    std::cout << fmt::format("wrote {} files to {}\n", r.files.size() + 1, r.out_dir);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kNoInput;
  }
}
