#include "gmswarm/circuit.hpp"

#include <cmath>
#include <numbers>

#include "gmswarm/error.hpp"

namespace gmswarm {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invalid_config, what);
}

}  // namespace

void TopologySpec::validate() const {
  require(!groups.empty(), "topology.groups must not be empty");
  for (const auto& g : groups) {
    require(!g.name.empty(), "topology.groups[].name must be set");
    require(g.multiplicity >= 1, "topology.groups[" + g.name + "].multiplicity must be >= 1");
    require(g.current_ratio > 0.0, "topology.groups[" + g.name + "].current_ratio must be > 0");
    require(!g.allowed_lengths_um.empty(), "lengths for group " + g.name + " must not be empty");
    for (double l : g.allowed_lengths_um) {
      require(l > 0.0, "lengths for group " + g.name + " must be positive");
    }
  }
  require(supply_voltage_v > 0.0, "topology.supply_voltage_v must be > 0");
  require(load_capacitance_pf > 0.0, "topology.load_capacitance_pf must be > 0");
  require(total_current_ratio > 0.0, "topology.total_current_ratio must be > 0");
  require(input_group < groups.size(), "topology.input_group out of range");
  require(!tail_group || *tail_group < groups.size(), "topology.tail_group out of range");
  require(!stacks.empty(), "topology.stacks must not be empty");
  for (const auto& s : stacks) {
    require(s.load < groups.size(), "topology.stacks[].load out of range");
    require(!s.cascode || *s.cascode < groups.size(), "topology.stacks[].cascode out of range");
  }
  for (auto p : pole_groups) require(p < groups.size(), "topology.pole_groups out of range");
  require(slew_ratio > 0.0, "topology.slew_ratio must be > 0");
  require(nondominant_pole_factor > 0.0, "topology.nondominant_pole_factor must be > 0");
}

TopologySpec default_fdda_topology(const std::vector<double>& lengths_um) {
  TopologySpec t;
  t.groups = {
      {"M1-M4", DeviceKind::n_type, 4, 0.5, lengths_um},
      {"M5-M6", DeviceKind::p_type, 2, 0.25, lengths_um},
      {"M7-M8", DeviceKind::p_type, 2, 0.25, lengths_um},
      {"M9-M10", DeviceKind::n_type, 2, 0.25, lengths_um},
      {"M11-M12", DeviceKind::n_type, 2, 0.25, lengths_um},
      {"M13-M14", DeviceKind::n_type, 2, 1.0, lengths_um},
  };
  t.supply_voltage_v = 1.8;
  t.load_capacitance_pf = 1.0;
  t.total_current_ratio = 2.75;
  t.input_group = 0;
  t.tail_group = 5;
  t.stacks = {{2, 1}, {3, 4}};
  t.pole_groups = {2, 3};
  return t;
}

std::string_view constraint_name(Constraint c) noexcept {
  switch (c) {
    case Constraint::av0: return "av0";
    case Constraint::gbw: return "gbw";
    case Constraint::phase_margin: return "phase_margin";
    case Constraint::slew_rate: return "slew_rate";
    case Constraint::cmrr: return "cmrr";
    case Constraint::psrr: return "psrr";
    case Constraint::power: return "power";
  }
  return "unknown";
}

PerfGoals fdda_goals() {
  PerfGoals g;
  g.min_av0_db = 72.0;
  g.min_gbw_hz = 1e6;
  g.min_pm_deg = 60.0;
  g.min_sr_v_per_us = 1.0;
  g.min_cmrr_db = 120.0;
  g.min_psrr_db = 60.0;
  g.max_power_uw = 40.0;
  return g;
}

std::vector<Constraint> check_goals(const PerfMetrics& m, const PerfGoals& goals,
                                    MissingMetric missing) {
  std::vector<Constraint> failed;
  auto at_least = [&](Constraint c, const std::optional<double>& value,
                      const std::optional<double>& goal) {
    if (!goal) return;
    if (!value) {
      if (missing == MissingMetric::fail) failed.push_back(c);
      return;
    }
    if (!(*value >= *goal)) failed.push_back(c);
  };
  at_least(Constraint::av0, m.av0_db, goals.min_av0_db);
  at_least(Constraint::gbw, m.gbw_hz, goals.min_gbw_hz);
  at_least(Constraint::phase_margin, m.pm_deg, goals.min_pm_deg);
  at_least(Constraint::slew_rate, m.sr_v_per_us, goals.min_sr_v_per_us);
  at_least(Constraint::cmrr, m.cmrr_db, goals.min_cmrr_db);
  at_least(Constraint::psrr, m.psrr_db, goals.min_psrr_db);
  if (goals.max_power_uw && !(m.power_uw <= *goals.max_power_uw)) {
    failed.push_back(Constraint::power);
  }
  return failed;
}

SizingSolution size_circuit(const DesignVector& x, const LutSet& luts, const TopologySpec& topo) {
  const std::size_t n = topo.group_count();
  if (x.gmid.size() != n || x.l_index.size() != n) {
    throw Error(Errc::invalid_range, "design vector has wrong group count");
  }
  if (!(x.tail_current_ua > 0.0)) {
    throw Error(Errc::non_positive_current, "tail current must be > 0");
  }
  SizingSolution s;
  s.tail_current_ua = x.tail_current_ua;
  s.idd_ua = topo.total_current_ratio * x.tail_current_ua;
  s.groups.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DeviceGroup& g = topo.groups[i];
    if (x.l_index[i] >= g.allowed_lengths_um.size()) {
      throw Error(Errc::length_not_in_grid, "length index out of range for group " + g.name);
    }
    const DeviceLut& lut = luts.get(g.kind);
    GroupSizing gs;
    gs.length_um = g.allowed_lengths_um[x.l_index[i]];
    gs.gmid = x.gmid[i];
    gs.drain_current_ua = g.current_ratio * x.tail_current_ua;
    gs.width_um = lut.width_for_current(gs.gmid, gs.length_um, gs.drain_current_ua);
    gs.gm_us = gs.gmid * gs.drain_current_ua;
    gs.gds_us = gs.gm_us / lut.lookup(LutColumn::intrinsic_gain, gs.gmid, gs.length_um);
    gs.vgs_v = lut.lookup(LutColumn::gate_source_voltage, gs.gmid, gs.length_um);
    gs.transit_hz = lut.lookup(LutColumn::transit_figure, gs.gmid, gs.length_um);
    s.groups.push_back(gs);
  }
  return s;
}

double gate_area(const SizingSolution& s, const TopologySpec& topo) {
  double area = 0.0;
  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    const double m = topo.area_weighting == AreaWeighting::multiplicity
                         ? static_cast<double>(topo.groups[i].multiplicity)
                         : 1.0;
    area += m * s.groups[i].width_um * s.groups[i].length_um;
  }
  return area;
}

double gate_area(const std::vector<GroupDimensions>& dims, const TopologySpec& topo) {
  double area = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const double m = topo.area_weighting == AreaWeighting::multiplicity && i < topo.groups.size()
                         ? static_cast<double>(topo.groups[i].multiplicity)
                         : 1.0;
    area += m * dims[i].width_um * dims[i].length_um;
  }
  return area;
}

PerfMetrics analytic_metrics(const SizingSolution& s, const TopologySpec& topo) {
  PerfMetrics m;
  const GroupSizing& in = s.groups.at(topo.input_group);

  // Output resistance in MOhm (gm, gds in uS).
  double conductance = 0.0;
  for (const auto& stack : topo.stacks) {
    const GroupSizing& load = s.groups.at(stack.load);
    double r = 1.0 / load.gds_us;
    if (stack.cascode) {
      const GroupSizing& c = s.groups.at(*stack.cascode);
      r *= c.gm_us / c.gds_us;
    }
    conductance += 1.0 / r;
  }
  const double r_out = 1.0 / conductance;
  m.av0_db = 20.0 * std::log10(in.gm_us * r_out);

  const double c_se = topo.single_ended_load_pf();
  const double gbw = in.gm_us * 1e-6 / (2.0 * std::numbers::pi * c_se * 1e-12);
  m.gbw_hz = gbw;

  if (topo.pole_groups.empty()) {
    m.pm_deg = 90.0;
  } else {
    double f_min = s.groups.at(topo.pole_groups.front()).transit_hz;
    for (auto p : topo.pole_groups) f_min = std::min(f_min, s.groups.at(p).transit_hz);
    const double f_nd = topo.nondominant_pole_factor * f_min;
    m.pm_deg = 90.0 - std::atan(gbw / f_nd) * 180.0 / std::numbers::pi;
  }

  // uA / pF = V/us
  m.sr_v_per_us = topo.slew_ratio * s.tail_current_ua / c_se;
  m.power_uw = topo.supply_voltage_v * s.idd_ua;
  m.gate_area_um2 = gate_area(s, topo);
  return m;
}

SurvivabilityResult survivability(const DesignVector& x, const LutSet& luts,
                                  const TopologySpec& topo, const PerfGoals& goals) {
  SurvivabilityResult r;
  SizingSolution s;
  try {
    s = size_circuit(x, luts, topo);
  } catch (const Error& e) {
    r.infeasible_reason = e.what();
    return r;
  }
  r.metrics = analytic_metrics(s, topo);
  r.failed = check_goals(*r.metrics, goals, MissingMetric::skip);
  r.pass = r.failed.empty();
  return r;
}

double fitness(const DesignVector& x, const LutSet& luts, const TopologySpec& topo) {
  return gate_area(size_circuit(x, luts, topo), topo);
}

SizingSolution sizing_from_dimensions(const std::vector<GroupDimensions>& dims,
                                      double tail_current_ua, const LutSet& luts,
                                      const TopologySpec& topo) {
  if (dims.size() != topo.group_count()) {
    throw Error(Errc::invalid_sizing, "sizing lists " + std::to_string(dims.size()) +
                                          " groups, topology has " +
                                          std::to_string(topo.group_count()));
  }
  if (!(tail_current_ua > 0.0)) throw Error(Errc::invalid_sizing, "tail current must be > 0");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!(dims[i].width_um > 0.0) || !(dims[i].length_um > 0.0)) {
      throw Error(Errc::invalid_sizing, "group " + topo.groups[i].name + " needs positive W and L");
    }
  }
  SizingSolution s;
  s.tail_current_ua = tail_current_ua;
  s.idd_ua = topo.total_current_ratio * tail_current_ua;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const DeviceGroup& g = topo.groups[i];
    const GroupDimensions& d = dims[i];
    const DeviceLut& lut = luts.get(g.kind);
    GroupSizing gs;
    gs.width_um = d.width_um;
    gs.length_um = d.length_um;
    gs.drain_current_ua = g.current_ratio * tail_current_ua;
    auto gmid = lut.gmid_for_current_density(d.length_um, gs.drain_current_ua / d.width_um);
    if (!gmid) {
      throw Error(Errc::gmid_out_of_range,
                  "current density of group " + g.name + " is outside the table");
    }
    gs.gmid = *gmid;
    gs.gm_us = gs.gmid * gs.drain_current_ua;
    gs.gds_us = gs.gm_us / lut.lookup(LutColumn::intrinsic_gain, gs.gmid, gs.length_um);
    gs.vgs_v = lut.lookup(LutColumn::gate_source_voltage, gs.gmid, gs.length_um);
    gs.transit_hz = lut.lookup(LutColumn::transit_figure, gs.gmid, gs.length_um);
    s.groups.push_back(gs);
  }
  return s;
}

}  // namespace gmswarm
