#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iat/iat.hpp"

namespace iat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Everything a subcommand needs, filled from the command line.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> inputs;   // role -> path
  std::map<std::string, std::string> outputs;  // role -> path
  std::string penalty = "unit";
  std::string family = "balls";
  std::string weight = "unit";
  std::string mode;
  std::string name;
  std::string problem;
  std::optional<std::string> center;
  std::optional<double> support_radius;
  std::optional<double> s_max;
  std::optional<std::size_t> resolution;
  std::size_t dim = 3;
  std::size_t levels = 100;
  std::optional<std::size_t> panels;
  double cap = kDefaultKernelCap;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::optional<double> tolerance;
};

/// Exit status for a library error: 3 for numeric degeneracy, 2 otherwise.
int exit_code(ErrorCode code);

PenaltySpec parse_penalty(const std::string& text);
Point parse_point(const std::string& text);

/// Runs one configured command. Errors become a JSON object on `err`.
int run(const RunConfig& config, std::ostream& err);

/// Parses argv-style arguments (without the program name) and runs them.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iat::cli
