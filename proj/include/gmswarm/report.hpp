#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gmswarm {

struct TraceSummary {
  std::size_t rows = 0;
  double first_area_um2 = 0.0;
  double best_area_um2 = 0.0;
  double elapsed_s = 0.0;
  bool monotone = true;
};

/// Reads a convergence trace CSV. Throws Errc::parse_error when malformed.
TraceSummary parse_trace(std::string_view csv_text);
TraceSummary read_trace(const std::filesystem::path& path);

/// 100 * (1 - best / reference). Throws Errc::invalid_range for reference <= 0.
double reduction_pct(double best_area_um2, double reference_area_um2);

struct SpreadStats {
  double best = 0.0;
  double median = 0.0;
  double worst = 0.0;
};

SpreadStats spread(std::vector<double> values);

}  // namespace gmswarm
