#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace slowssep {

/// Bad command line or config file; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string experiment;

  // lattice and dynamics
  int N = 64;
  double alpha = 0.2;
  double beta = 0.8;
  std::string time_scale = "accelerated";
  double T = 3.0;
  std::size_t replicas = 100;
  std::uint64_t seed = 0;
  std::string kernel = "auto";

  // output
  std::string out_dir = ".";
  std::string format = "csv";  ///< csv | json | both

  // experiment-specific
  double grid_step = 0.1;
  std::string initial = "empty";  ///< empty | full | product | fixed
  double initial_mass = 0.5;      ///< density / mass for product and fixed
  int cells = 8;
  std::string profile = "step";  ///< step | cosine
  double tilt = 0.6931471805599453;
  std::string control = "bridge";  ///< constant | anti-relaxation | bridge
  double threshold = 0.75;
  double m0 = -1;  ///< negative: start at gamma
  bool sup_mode = false;
  std::string solver = "aggregation";
  double m = 0.75;
  double burn_in = 1.0;
  double sample_step = 0.1;
  std::optional<double> gamma;  ///< numerics-only experiments (rate-table, quasi-potential)
  std::string m_grid = "0.1:0.9:0.1";
  double dt = 1e-4;
  int refine = 3;
  std::string mode = "cosine";  ///< pde-decay: cosine | two-mode

  /// gamma for this run: (alpha+beta)/2, or the explicit value where accepted.
  double effective_gamma() const;

  nlohmann::json to_json() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Experiments accepted as the first positional argument.
const std::vector<std::string>& experiment_names();

/// Parses "slowssep <experiment> [--config file] [--key value ...]". A config
/// file holds flat "key = value" lines (an "experiment" key may name the
/// subcommand); command-line flags override file values; unknown keys are
/// rejected. Throws ConfigError on any schema violation.
RunConfig parse_config(const std::vector<std::string>& args);

/// Runs the experiment, writes its report files and prints a summary.
/// Returns the process exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full entry point: parse, run, map errors to exit codes (2: config, 1: runtime).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slowssep
