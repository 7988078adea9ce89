#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace plsim::cli {

struct RunConfig {
  std::string command;  // fit | select | test-linear | test-link | simulate | bandwidth

  std::string data;
  std::string y = "y";
  std::vector<std::string> z;
  std::vector<std::string> x;
  std::string bandwidth = "cv";  // "cv" or a positive number
  std::vector<double> bandwidth_grid;
  std::string kernel = "triweight";
  double tol = 1e-6;
  int max_iter = 200;
  std::string grad = "exact";

  std::string criterion = "bic";
  int grid = 50;
  std::string penalize = "both";
  std::string aic_penalty = "printed";

  std::string a_path;
  std::string delta_path;
  std::string method = "t1";
  std::string rk_variant = "printed";

  std::string example;
  std::optional<long long> n;
  std::optional<double> sigma;
  std::optional<int> reps;
  std::uint64_t seed = 1;
  std::string power_csv;

  int threads = 0;  // 0: all hardware threads
  bool deterministic = false;
  bool allow_partial = false;
  std::string out;

  bool operator==(const RunConfig&) const = default;
};

/// Result of argument parsing. `exit_code` is set when the process should
/// stop right away: 0 after --help / --version, 2 on a usage error.
struct ParseResult {
  std::optional<RunConfig> config;
  std::optional<int> exit_code;
  std::string stdout_text;
  /// {"code": UnknownFlag | MissingRequired | ConflictingFlags | InvalidArgument, "message", ...}
  nlohmann::json error;
};

/// argv[0] excluded.
ParseResult parse_args(const std::vector<std::string>& args);

/// Exit 0 on success, 1 on a computational failure (error JSON on `err`).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args then run; returns the process exit code.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string version_text();

}  // namespace plsim::cli
