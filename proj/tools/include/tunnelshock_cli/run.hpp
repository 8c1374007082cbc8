#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tunnelshock_cli/scenario.hpp"

namespace tunnelshock::cli {

enum class Command { evolve, singularity, shock, verify, oracle, limit_study };
enum class OracleKind { hopf_lax, godunov, kf_lattice, tunnel_compare };

const char* to_string(Command c);
const char* to_string(OracleKind k);
std::optional<Command> parse_command(const std::string& name);
std::optional<OracleKind> parse_oracle(const std::string& name);

struct RunOptions {
  /// Output directory; the scenario's [output] dir when empty.
  std::string out_dir;
  /// 0: TUNNELSHOCK_THREADS or 1.
  unsigned threads = 0;
  /// Overrides [verify] seed.
  std::optional<std::uint64_t> seed;
  OracleKind oracle = OracleKind::hopf_lax;
  /// Command line as typed, echoed into the manifest.
  std::vector<std::string> argv;
};

struct RunResult {
  std::string out_dir;
  /// CSV files written, in order.
  std::vector<std::string> files;
  /// Name-value pairs also written to summary.csv.
  std::vector<std::pair<std::string, double>> summary;
};

/// Runs one pipeline and writes its CSVs, summary.csv and manifest.json.
/// Throws ValidationError, NumericalError or std::ios_base::failure.
RunResult run(Command command, const Scenario& scenario, const RunOptions& options);

}  // namespace tunnelshock::cli
