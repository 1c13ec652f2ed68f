#include "gmswarm/report.hpp"

#include <algorithm>

#include "gmswarm/error.hpp"
#include "gmswarm/text.hpp"

namespace gmswarm {

TraceSummary parse_trace(std::string_view csv_text) {
  TraceSummary s;
  std::vector<std::string_view> header;
  std::size_t area_col = 0;
  std::size_t time_col = 0;
  for (auto line : split_lines(csv_text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ',');
    if (header.empty()) {
      header = fields;
      auto find = [&](std::string_view name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(Errc::parse_error, "trace lacks column " + std::string(name));
        return static_cast<std::size_t>(it - header.begin());
      };
      area_col = find("gbest_area_um2");
      time_col = find("elapsed_s");
      continue;
    }
    if (fields.size() != header.size()) throw Error(Errc::parse_error, "ragged trace row");
    auto area = parse_double(trim(fields[area_col]));
    auto elapsed = parse_double(trim(fields[time_col]));
    if (!area || !elapsed) throw Error(Errc::parse_error, "non-numeric trace value");
    if (s.rows == 0) {
      s.first_area_um2 = *area;
      s.best_area_um2 = *area;
    } else {
      if (*area > s.best_area_um2) s.monotone = false;
      s.best_area_um2 = std::min(s.best_area_um2, *area);
    }
    s.elapsed_s = *elapsed;
    ++s.rows;
  }
  if (s.rows == 0) throw Error(Errc::parse_error, "trace has no data rows");
  return s;
}

TraceSummary read_trace(const std::filesystem::path& path) {
  return parse_trace(read_file(path));
}

double reduction_pct(double best_area_um2, double reference_area_um2) {
  if (!(reference_area_um2 > 0.0)) {
    throw Error(Errc::invalid_range, "reference area must be > 0");
  }
  return 100.0 * (1.0 - best_area_um2 / reference_area_um2);
}

SpreadStats spread(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median =
      n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return {values.front(), median, values.back()};
}

}  // namespace gmswarm
