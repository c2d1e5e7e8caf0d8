#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rhoconcave/simbench.hpp"

namespace rhoconcave::cli {

enum ExitCode : int { kExitConverged = 0, kExitInputError = 1, kExitNotConverged = 2 };

/// Parsed command line, validated before any computation.
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output_prefix;
  double alpha = 1.0;
  std::string grid;  ///< "N" (1D) or "AxB" (2D); empty for defaults
  double margin = 0.1;
  double tol = 1e-7;
  int max_iter = 200;
  std::optional<std::vector<double>> levels;
  std::vector<std::string> targets;
  std::vector<std::size_t> sizes;
  std::size_t reps = 50;
  std::vector<double> alphas;
  std::uint64_t seed = 1;
  bool rates = false;
  bool median = false;
  std::string table;  ///< existing cells TSV for --rates without a run
  unsigned threads = 0;
};

/// Entry point shared by the executable and tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_contours(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Cell rows: target, n, alpha, metric, mean, median, failures, reps.
std::string format_table(const ExperimentTable& table);
/// Rows: alpha, metric, statistic, beta, std_err, observations.
std::string format_rates(const ExperimentTable& table, bool use_median);
/// Inverse of format_table for rate estimation; each cell holds its mean
/// (or median) as a single replicate value.
ExperimentTable parse_table(const std::string& text, bool use_median);

}  // namespace rhoconcave::cli
