#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gmswarm {

enum class DeviceKind { n_type, p_type };

std::string_view to_string(DeviceKind kind) noexcept;
std::optional<DeviceKind> parse_device_kind(std::string_view text) noexcept;

enum class LutColumn {
  current_density,      // JD = ID/W, uA/um
  intrinsic_gain,       // gm/gds
  transit_figure,       // gm/Cgg, Hz
  gate_source_voltage,  // VGS, V
  saturation_voltage,   // VDSsat, V
};

inline constexpr std::size_t kLutColumnCount = 5;

std::string_view column_name(LutColumn column) noexcept;
/// Accepts both the enum spelling ("current_density") and the CSV header
/// spelling ("jd_uA_per_um"). Throws Errc::unknown_column.
LutColumn parse_column(std::string_view name);

/// Characterization samples for one channel length, sorted by gm/ID.
struct LutSlice {
  double length_um = 0.0;
  std::vector<double> gmid;
  std::array<std::vector<double>, kLutColumnCount> columns;

  const std::vector<double>& column(LutColumn c) const {
    return columns[static_cast<std::size_t>(c)];
  }
  std::vector<double>& column(LutColumn c) { return columns[static_cast<std::size_t>(c)]; }

  bool operator==(const LutSlice&) const = default;
};

/// gm/ID lookup table for one device kind. Immutable once built; lengths are
/// the discrete L grid and are never interpolated across.
class DeviceLut {
 public:
  DeviceLut() = default;
  /// Validates every invariant; throws Error on violation.
  DeviceLut(DeviceKind kind, std::vector<LutSlice> slices);

  DeviceKind kind() const noexcept { return kind_; }
  const std::vector<LutSlice>& slices() const noexcept { return slices_; }
  std::vector<double> lengths() const;
  bool has_length(double length_um) const noexcept;

  /// Throws Errc::length_not_in_grid.
  const LutSlice& slice(double length_um) const;

  /// Piecewise-linear in gm/ID at fixed L. Exact grid hits return the stored
  /// value unchanged.
  double lookup(LutColumn column, double gmid, double length_um) const;
  double lookup(std::string_view column, double gmid, double length_um) const;

  /// W = ID / JD(gmid, L), in um for ID in uA.
  double width_for_current(double gmid, double length_um, double drain_current_ua) const;

  /// Inverse of JD along gm/ID at fixed L (JD must be strictly monotone on the
  /// slice). Returns nullopt when the density is outside the tabulated span.
  std::optional<double> gmid_for_current_density(double length_um, double jd_ua_per_um) const;

  bool operator==(const DeviceLut&) const = default;

 private:
  DeviceKind kind_ = DeviceKind::n_type;
  std::vector<LutSlice> slices_;
};

/// Reads the flat CSV format:
///   L_um,gmid,jd_uA_per_um,gm_gds,gm_cgg_hz,vgs_v,vdssat_v
/// Rows may be in any order; `#` lines are comments. A comment of the form
/// `# device_kind=p_type` sets the kind, otherwise `fallback_kind` is used.
DeviceLut load_lut(const std::filesystem::path& path,
                   DeviceKind fallback_kind = DeviceKind::n_type);
DeviceLut parse_lut(std::string_view csv_text, DeviceKind fallback_kind = DeviceKind::n_type);

void write_lut(const DeviceLut& lut, const std::filesystem::path& path);
std::string format_lut(const DeviceLut& lut);

/// Analytic device model behind generate_synthetic_lut. The constants are
/// fixtures chosen for smooth, monotone curves, not a physical process.
struct SyntheticModel {
  double j0_ua_per_um = 100.0;
  double l0_um = 0.15;
  double g0 = 6.0;
  double a0 = 8.0;
  double gain_knee = 28.0;
  double f0_hz = 30e9;
  double g1 = 10.0;

  double current_density(double gmid, double length_um) const;
  double intrinsic_gain(double gmid, double length_um) const;
  double transit_figure(double gmid, double length_um) const;
  double gate_source_voltage(double gmid) const;
  double saturation_voltage(double gmid) const;
};

struct GmidRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniformly spaced gm/ID samples per length. Throws Errc::invalid_range.
DeviceLut generate_synthetic_lut(DeviceKind kind, const std::vector<double>& lengths_um,
                                 GmidRange range, std::size_t sample_count,
                                 const SyntheticModel& model = {});

}  // namespace gmswarm
