#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmswarm/circuit.hpp"

namespace gmswarm::cli {

enum ExitCode : int {
  kOk = 0,
  kGoalsFailed = 1,
  kInvalidInput = 2,
  kInitExhausted = 3,
  kSimulatorFailure = 4,
};

struct OptimizeOptions {
  std::filesystem::path config;
  std::vector<std::uint64_t> seeds;  // overrides the config list when non-empty
  std::vector<std::string> sets;     // key=value overrides
  std::optional<std::filesystem::path> out;
  std::size_t parallel_seeds = 1;
  bool timing = true;
};

struct EvaluateOptions {
  std::filesystem::path config;
  std::filesystem::path sizing;
  std::optional<double> tail_current_ua;
  std::vector<std::string> sets;
};

struct ReportOptions {
  std::vector<std::filesystem::path> traces;
  double reference_area_um2 = 0.0;
};

struct GenLutOptions {
  std::string kind = "n_type";
  std::filesystem::path out;
  std::vector<double> lengths_um;
  double gmid_min = 3.0;
  double gmid_max = 26.0;
  std::size_t samples = 93;
};

int cmd_optimize(const OptimizeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gen_lut(const GenLutOptions& opts, std::ostream& out, std::ostream& err);

struct SizingFile {
  std::vector<GroupDimensions> groups;
  std::optional<double> tail_current_ua;  // from a `# tail_current_uA=` comment
};

/// CSV `group,W_um,L_um`. Throws Errc::invalid_sizing.
SizingFile parse_sizing(std::string_view text);
std::string format_sizing(const SizingFile& sizing);

/// Lengths of the bundled synthetic tables.
std::vector<double> default_lut_lengths();

}  // namespace gmswarm::cli
