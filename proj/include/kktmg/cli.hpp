#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kktmg/reference.hpp"
#include "kktmg/spectral.hpp"

namespace kktmg {

enum class RunMode { Solve, ContractionSweep, Table1 };

std::string_view mode_name(RunMode mode);
/// Accepts hyphen and underscore spellings.
RunMode parse_mode(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  DomainKind domain = DomainKind::UnitSquare;
  std::vector<double> betas{1e-2};
  /// -1 picks a mode and domain dependent default.
  int max_level = -1;
  CycleKind cycle = CycleKind::W;
  /// (m1, m2) pairs; empty selects (1, 1), or (2, 2) in table1 mode.
  std::vector<std::pair<int, int>> smoothing;
  int inner_nu = 4;
  double inner_damping = 0.0;
  RunMode mode = RunMode::ContractionSweep;
  unsigned seed = 12345;
  std::string output_path;
  int jobs = 1;
  TargetKind yd = TargetKind::One;
  double fmg_tolerance = 1e-8;
  double power_tol = 1e-4;
  int dense_threshold = 400;
  /// Off makes sweep CSVs reproducible byte for byte (timing column 0).
  bool timing = true;
  std::string mesh_dump;
  std::string matrix_dump;
};

/// Largest level accepted for a domain.
int max_level_cap(DomainKind domain);
/// Fills defaults and checks ranges; throws ConfigError.
RunConfig resolve(RunConfig config);

/// Parses command line flags (and an optional key=value config file given
/// by --config; flags win). Returns std::nullopt after printing help.
/// Throws ConfigError on invalid input.
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out);

/// Executes a resolved configuration. Returns the process exit status:
/// 0 success, 2 configuration error, 3 numerical failure.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_command_line + resolve + run with exit-code mapping.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kktmg
