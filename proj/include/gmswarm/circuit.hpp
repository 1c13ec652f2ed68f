#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmswarm/lut.hpp"

namespace gmswarm {

/// One matched transistor group; all devices in it share W, L and ID.
struct DeviceGroup {
  std::string name;
  DeviceKind kind = DeviceKind::n_type;
  int multiplicity = 1;
  double current_ratio = 1.0;  // per-device ID = current_ratio * I_T
  std::vector<double> allowed_lengths_um;

  bool operator==(const DeviceGroup&) const = default;
};

/// A cascoded (or plain) output branch. Its output resistance is
/// (gm/gds)_cascode / gds_load, or 1 / gds_load without a cascode.
struct OutputStack {
  std::optional<std::size_t> cascode;
  std::size_t load = 0;

  bool operator==(const OutputStack&) const = default;
};

enum class AreaWeighting { multiplicity, unit };

struct TopologySpec {
  std::vector<DeviceGroup> groups;
  double supply_voltage_v = 1.8;
  double load_capacitance_pf = 1.0;  // differential; each output sees 2x
  double total_current_ratio = 2.75;
  std::size_t input_group = 0;
  std::optional<std::size_t> tail_group;
  std::vector<OutputStack> stacks;
  std::vector<std::size_t> pole_groups;  // transit figures setting the non-dominant pole
  double slew_ratio = 0.5;
  double nondominant_pole_factor = 0.5;
  AreaWeighting area_weighting = AreaWeighting::multiplicity;

  double single_ended_load_pf() const noexcept { return 2.0 * load_capacitance_pf; }
  std::size_t group_count() const noexcept { return groups.size(); }
  /// Throws Errc::invalid_config naming the first violated invariant.
  void validate() const;

  bool operator==(const TopologySpec&) const = default;
};

/// The folded-cascode FDDA with its six matched groups M1-4, M5-6, M7-8,
/// M9-10, M11-12, M13-14. Branch currents are assumptions kept as data.
TopologySpec default_fdda_topology(const std::vector<double>& lengths_um);

struct LutSet {
  DeviceLut n_type;
  DeviceLut p_type;

  const DeviceLut& get(DeviceKind kind) const noexcept {
    return kind == DeviceKind::n_type ? n_type : p_type;
  }
};

/// Mixed position: continuous gm/ID per group, discrete length index per
/// group, continuous tail current.
struct DesignVector {
  std::vector<double> gmid;
  std::vector<std::size_t> l_index;
  double tail_current_ua = 0.0;

  bool operator==(const DesignVector&) const = default;
};

struct GroupSizing {
  double width_um = 0.0;
  double length_um = 0.0;
  double drain_current_ua = 0.0;
  double gmid = 0.0;
  double gm_us = 0.0;
  double gds_us = 0.0;
  double vgs_v = 0.0;
  double transit_hz = 0.0;

  bool operator==(const GroupSizing&) const = default;
};

struct SizingSolution {
  std::vector<GroupSizing> groups;
  double tail_current_ua = 0.0;
  double idd_ua = 0.0;

  bool operator==(const SizingSolution&) const = default;
};

enum class Constraint { av0, gbw, phase_margin, slew_rate, cmrr, psrr, power };

std::string_view constraint_name(Constraint c) noexcept;

struct PerfGoals {
  std::optional<double> min_av0_db;
  std::optional<double> min_gbw_hz;
  std::optional<double> min_pm_deg;
  std::optional<double> min_sr_v_per_us;
  std::optional<double> min_cmrr_db;
  std::optional<double> min_psrr_db;
  std::optional<double> max_power_uw;

  bool operator==(const PerfGoals&) const = default;
};

/// Table II goal column: Av0 >= 72 dB, GBW >= 1 MHz, PM >= 60 deg,
/// SR >= 1 V/us, CMRR >= 120 dB, PSRR >= 60 dB, power <= 40 uW.
PerfGoals fdda_goals();

struct PerfMetrics {
  std::optional<double> av0_db;
  std::optional<double> gbw_hz;
  std::optional<double> pm_deg;
  std::optional<double> sr_v_per_us;
  std::optional<double> sr_fall_v_per_us;  // reported, never gated
  std::optional<double> cmrr_db;
  std::optional<double> psrr_db;
  double power_uw = 0.0;
  double gate_area_um2 = 0.0;
};

/// What to do when a goal is set but the metric was not measured.
enum class MissingMetric { skip, fail };

/// Returns every violated constraint; minima compare with >=, maxima with <=.
std::vector<Constraint> check_goals(const PerfMetrics& m, const PerfGoals& goals,
                                    MissingMetric missing);

/// Throws propagated LUT errors (GmidOutOfRange, LengthNotInGrid, ...).
SizingSolution size_circuit(const DesignVector& x, const LutSet& luts, const TopologySpec& topo);

double gate_area(const SizingSolution& s, const TopologySpec& topo);

/// First-order folded-cascode model. CMRR/PSRR stay unset.
PerfMetrics analytic_metrics(const SizingSolution& s, const TopologySpec& topo);

struct SurvivabilityResult {
  bool pass = false;
  std::optional<PerfMetrics> metrics;  // unset when x could not be sized
  std::vector<Constraint> failed;
  std::string infeasible_reason;
};

SurvivabilityResult survivability(const DesignVector& x, const LutSet& luts,
                                  const TopologySpec& topo, const PerfGoals& goals);

/// gate_area(size_circuit(x)); sizing errors propagate.
double fitness(const DesignVector& x, const LutSet& luts, const TopologySpec& topo);

struct GroupDimensions {
  std::string name;
  double width_um = 0.0;
  double length_um = 0.0;
};

/// Area from raw W/L without any LUT involvement.
double gate_area(const std::vector<GroupDimensions>& dims, const TopologySpec& topo);

/// Rebuilds an operating point from W/L and the tail current by inverting the
/// current-density column. Throws Errc::invalid_sizing on bad dimensions and
/// Errc::gmid_out_of_range when a density falls outside the table.
SizingSolution sizing_from_dimensions(const std::vector<GroupDimensions>& dims,
                                      double tail_current_ua, const LutSet& luts,
                                      const TopologySpec& topo);

}  // namespace gmswarm
