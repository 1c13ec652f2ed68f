#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmswarm/circuit.hpp"

namespace gmswarm {

enum class Testbench { diff_ac, cm_ac, psrr_ac, tran_step, op };

inline constexpr std::array<Testbench, 5> kAllTestbenches = {
    Testbench::diff_ac, Testbench::cm_ac, Testbench::psrr_ac, Testbench::tran_step,
    Testbench::op};

std::string_view testbench_name(Testbench tb) noexcept;

/// Netlist text with `{{identifier}}` placeholders. Every manifest entry
/// must occur in the text.
class NetlistTemplate {
 public:
  NetlistTemplate(std::string text, std::vector<std::string> manifest = {});
  static NetlistTemplate from_file(const std::filesystem::path& path,
                                   std::vector<std::string> manifest = {});

  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& manifest() const noexcept { return manifest_; }
  /// Distinct placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;

 private:
  std::string text_;
  std::vector<std::string> manifest_;
};

/// W1..Wn, L1..Ln, VB1..VBn, ID1..IDn, IT, IDD, VDD, CL, CLSE.
std::vector<std::string> standard_manifest(const TopologySpec& topo);

using PlaceholderValues = std::map<std::string, std::string, std::less<>>;

/// W/L in um with 4 decimals, voltages with 6 decimals, currents and
/// capacitances in SI units in scientific notation.
PlaceholderValues placeholder_values(const SizingSolution& s, const TopologySpec& topo);

/// Throws Errc::missing_placeholder_value for a manifest entry without a
/// value and Errc::unknown_placeholder for any other unresolved name.
std::string render_netlist(const NetlistTemplate& tpl, const PlaceholderValues& values);
std::string render_netlist(const NetlistTemplate& tpl, const SizingSolution& s,
                           const TopologySpec& topo, const PlaceholderValues& extra = {});

/// Whitespace-separated numeric rows as written by the simulator. Column
/// meaning per testbench:
///   diff_ac, cm_ac, psrr_ac: freq_hz mag_db phase_deg
///   tran_step:               time_s v_out_diff
///   op:                      ... supply_current_a (last column, first row)
struct RawTable {
  std::vector<std::vector<double>> rows;
};

/// Throws Errc::output_parse_error.
RawTable parse_raw_table(std::string_view text);

struct SimulatorJob {
  std::string netlist;
  Testbench testbench = Testbench::diff_ac;
  std::filesystem::path workdir;
  double timeout_s = 120.0;
  std::string data_file;  // relative to workdir, declared inside the netlist
};

/// Runs `<simulator> -b -o <log> <netlist>` inside job.workdir and parses the
/// data file. Throws SimulatorNotFound, NonZeroExit, Timeout or
/// OutputParseError.
RawTable run_simulation(const SimulatorJob& job, const std::filesystem::path& simulator);

/// Absolute path of an executable, searching PATH for bare names.
std::optional<std::filesystem::path> resolve_executable(const std::filesystem::path& simulator);

using RawResults = std::map<Testbench, RawTable>;

/// Linear interpolation of `column` against log10(frequency); clamps at the
/// sweep ends.
double interpolate_log_frequency(const RawTable& ac, std::size_t column, double freq_hz);

/// Throws Errc::missing_testbench when diff_ac or op is absent. Metrics whose
/// testbench is missing, and GBW/PM when the gain never crosses 0 dB, stay
/// unset. gate_area_um2 is left at 0 for the caller.
PerfMetrics extract_metrics(const RawResults& raw, const TopologySpec& topo);

/// Closed-form stand-in for simulation: analytic_metrics plus CMRR/PSRR from
/// a dominant-pole model (CM gain gds_tail / (2 gm_in), supply gain through
/// the first stack's load with the same dominant pole).
PerfMetrics surrogate_evaluate(const SizingSolution& s, const TopologySpec& topo);

class VerificationBackend {
 public:
  struct Capabilities {
    bool cmrr = false;
    bool psrr = false;
    bool transient = false;
  };

  virtual ~VerificationBackend() = default;
  virtual Capabilities capabilities() const = 0;
  virtual bool is_surrogate() const = 0;
  /// Safe for concurrent calls.
  virtual PerfMetrics evaluate(const SizingSolution& s, const TopologySpec& topo) const = 0;
};

class SurrogateBackend final : public VerificationBackend {
 public:
  Capabilities capabilities() const override { return {true, true, false}; }
  bool is_surrogate() const override { return true; }
  PerfMetrics evaluate(const SizingSolution& s, const TopologySpec& topo) const override;
};

struct SimulatorOptions {
  std::filesystem::path simulator = "ngspice";
  std::filesystem::path template_dir;
  std::filesystem::path work_root;  // empty: system temp directory
  double timeout_s = 120.0;
  bool keep_jobs = false;
  PlaceholderValues extra_values;
};

/// Renders `<template_dir>/<testbench>.cir` for every testbench that has a
/// template, runs each as its own job, and extracts the metrics. Each
/// template writes `<testbench>.dat` in its working directory.
class SimulatorBackend final : public VerificationBackend {
 public:
  explicit SimulatorBackend(SimulatorOptions options);

  Capabilities capabilities() const override;
  bool is_surrogate() const override { return false; }
  PerfMetrics evaluate(const SizingSolution& s, const TopologySpec& topo) const override;

 private:
  SimulatorOptions options_;
  std::map<Testbench, NetlistTemplate> templates_;
};

}  // namespace gmswarm
