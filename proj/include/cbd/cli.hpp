#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbd/error.hpp"
#include "cbd/harness.hpp"

namespace cbd {

enum class OutputFormat { Json, Csv };

struct CliConfig {
  std::string subcommand;
  std::string input;
  std::string roles;
  std::string scenario;
  std::size_t n = 50;
  double r = 0.0;
  std::string estimator = "vstat";
  std::string weight = "one";
  bool normalized_kernel = false;
  std::optional<std::uint64_t> tuples;
  BandwidthOverrides bandwidths;
  std::string method = "lwb";
  std::string sampler;
  std::size_t mh_steps = 0;
  std::optional<double> dlb_h;
  std::size_t M = 200;
  std::size_t T = 500;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::string grid;
  std::string n_grid = "10,50,100";
  std::string arms = "crt_true,crt_affine_shift";
  std::size_t per_arm = 200;
  std::size_t reps = 500;
  std::string which = "a";
  std::string sizes;
  std::string output;
  std::string manifest;
  std::string from_manifest;
  /// Empty selects the subcommand default (json for estimate/test/marks, csv for tables).
  std::optional<OutputFormat> format;
  unsigned threads = 1;
};

/// 0 ok, 2 usage, 3 data, 4 numeric failure.
int exit_code_for(ErrorKind kind);

/// Thrown by parse_and_validate when --help is requested.
struct HelpRequested {
  std::string text;
};

/// Parses and fully validates argv (argv[0] is the program name). Throws
/// Error(Usage) naming the offending flag.
CliConfig parse_and_validate(const std::vector<std::string>& argv);

/// Runs one invocation. Results go to `out` (or --output), diagnostics and
/// error JSON to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Parses "r=-2:2:0.5" (inclusive range) or "n=10,20,50" (list).
std::pair<GridAxis, std::vector<double>> parse_grid(const std::string& text);

}  // namespace cbd
