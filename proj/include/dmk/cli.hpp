#pragma once

// Command-line frontend: subcommands solve, check-bm, check-mink, equiv, uniq,
// audit-c0, search and gen.
//
// Structured records are space-separated key=value lines (17 significant
// digits) written to the records stream; the first line is a `#` header that
// carries the only timestamp. The summary table goes to the summary stream
// (stderr by default). Errors are also written there as records.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmk/solver.hpp"

namespace dmk::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kSolverFailure = 2, kUsage = 3 };

struct RunConfig {
  std::string command;
  int n = 2;
  double p = 0.5;
  double q = 1.8;
  /// Grid resolution; 0 selects 256 nodes on S^1 and band 24 on S^2.
  int res = 0;
  SolverConfig solver;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 1;
  std::vector<double> lambdas = {0.25, 0.5, 0.75};
  int threads = 1;

  std::string f = "1";
  /// Initial support function for solve; the unit ball when empty.
  std::string init;
  /// Body files for a single-pair check.
  std::string body_k, body_l;

  int inits = 5;
  int instances = 50;
  double lambda = 1.2;
  int budget = 1000;
  bool near_ball = false;

  std::string kind = "corpus";
  double amplitude = 0.3;
  int band = 4;
  std::string h;

  std::string records;
  std::string summary;
  std::string plot;
  std::string body_out = "solution.body";
  std::string out_dir = ".";
};

/// "1..5,8,10..12" → {1,2,3,4,5,8,10,11,12}. Throws std::invalid_argument.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
/// Comma-separated reals. Throws std::invalid_argument.
std::vector<double> parse_list(const std::string& text);

/// Appends `--key value` for every `key = value` line of the config file
/// whose flag is not already present in args (flags win). Blank lines and
/// lines starting with '#' are skipped. Throws std::invalid_argument.
std::vector<std::string> apply_config(const std::vector<std::string>& args, const std::string& path);

/// Executes a parsed configuration.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses args (without the program name) and runs them.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmk::cli
