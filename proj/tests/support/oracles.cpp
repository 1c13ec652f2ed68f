#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmswarm::testing {

std::string source_path(const std::string& relative) {
  return std::string(GMSWARM_SOURCE_DIR) + "/" + relative;
}

bool CallbackProblem::survives(const pso::Position& x) const {
  ++surv_calls;
  return survives_fn(x);
}

bool CallbackProblem::verify(const pso::Position& x) const {
  ++verif_calls;
  const bool ok = verify_fn(x);
  if (ok) {
    std::lock_guard lock(mu_);
    verified_.push_back(x);
  }
  return ok;
}

double CallbackProblem::fitness(const pso::Position& x) const {
  ++fitness_calls;
  return fitness_fn(x);
}

bool CallbackProblem::was_verified(const pso::Position& x) const {
  std::lock_guard lock(mu_);
  return std::find(verified_.begin(), verified_.end(), x) != verified_.end();
}

bool MixedSphere::survives(const pso::Position& x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < 6; ++k) s += x.continuous[k];
  return s <= 140.0;
}

bool MixedSphere::verify(const pso::Position& x) const {
  for (std::size_t k = 0; k < centre.size(); ++k) {
    if (std::abs(x.continuous[k] - centre[k]) > 9.0) return false;
  }
  return true;
}

double MixedSphere::fitness(const pso::Position& x) const {
  double f = kOffset;
  for (std::size_t k = 0; k < centre.size(); ++k) {
    const double d = x.continuous[k] - centre[k];
    f += d * d;
  }
  for (std::size_t j = 0; j < preferred.size(); ++j) {
    const double d = lengths[x.discrete[j]] - preferred[j];
    f += penalty_weight * d * d;
  }
  return f;
}

pso::Bounds MixedSphere::bounds() const {
  std::vector<pso::Range> r(6, pso::Range{5.0, 25.0});
  r.push_back({1.0, 20.0});
  return pso::Bounds::make(r, 6);
}

pso::DiscreteDist MixedSphere::dist() const {
  return pso::DiscreteDist::uniform(std::vector<std::size_t>(preferred.size(), lengths.size()));
}

double MixedSphere::optimum() const {
  double best = kOffset;  // continuous part vanishes at the centre
  for (double pref : preferred) {
    double m = std::numeric_limits<double>::infinity();
    for (double l : lengths) m = std::min(m, penalty_weight * (l - pref) * (l - pref));
    best += m;
  }
  return best;
}

std::vector<double> default_lengths() { return {0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0}; }

LutSet synthetic_luts() {
  LutSet s;
  s.n_type = generate_synthetic_lut(DeviceKind::n_type, default_lengths(), {3.0, 26.0}, 93);
  s.p_type = generate_synthetic_lut(DeviceKind::p_type, default_lengths(), {3.0, 26.0}, 93);
  return s;
}

double model_jd(double gmid, double length_um) {
  return 100.0 * (0.15 / length_um) * std::exp(-gmid / 6.0);
}

double model_gain(double gmid, double length_um) { return 8.0 * length_um / 0.15 * (28.0 - gmid); }

double model_transit(double gmid, double length_um) {
  return 30e9 * (0.15 / length_um) * (0.15 / length_um) * std::exp(-gmid / 10.0);
}

std::vector<GroupDimensions> table_one_dims() {
  return {{"M1-M4", 75.64, 0.3}, {"M5-M6", 0.84, 0.4},   {"M7-M8", 0.69, 1.0},
          {"M9-M10", 0.66, 3.0}, {"M11-M12", 2.48, 2.0}, {"M13-M14", 2.55, 0.7}};
}

LutSet table_one_luts() {
  SyntheticModel model;
  model.g0 = 3.0;
  return {generate_synthetic_lut(DeviceKind::n_type, default_lengths(), {3.0, 26.0}, 93, model),
          generate_synthetic_lut(DeviceKind::p_type, default_lengths(), {3.0, 26.0}, 93, model)};
}

SizingSolution table_one_sizing() {
  return sizing_from_dimensions(table_one_dims(), kTableOneTailCurrent, table_one_luts(),
                                default_fdda_topology(default_lengths()));
}

TopologySpec two_group_topology() {
  TopologySpec t;
  t.groups = {{"MIN", DeviceKind::n_type, 2, 0.5, default_lengths()},
              {"MLOAD", DeviceKind::p_type, 2, 0.5, default_lengths()}};
  t.supply_voltage_v = 1.8;
  t.load_capacitance_pf = 1.0;
  t.total_current_ratio = 1.0;
  t.input_group = 0;
  t.tail_group.reset();
  t.stacks = {{std::nullopt, 0}, {std::nullopt, 1}};
  t.pole_groups = {1};
  return t;
}

PerfGoals two_group_goals() {
  PerfGoals g;
  g.min_av0_db = 50.0;
  g.min_gbw_hz = 1e6;
  g.min_pm_deg = 60.0;
  g.max_power_uw = 36.0;
  return g;
}

GridOptimum grid_search(const LutSet& luts, const TopologySpec& topo, const PerfGoals& goals,
                        const std::vector<pso::Range>& gmid_bounds, pso::Range it_bounds,
                        double gmid_step, double it_step) {
  // Two groups only; enough for the comparison this oracle backs.
  auto points = [](pso::Range r, double step) {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((r.hi - r.lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(r.lo + static_cast<double>(i) * step);
    return v;
  };
  const auto g0 = points(gmid_bounds.at(0), gmid_step);
  const auto g1 = points(gmid_bounds.at(1), gmid_step);
  const auto its = points(it_bounds, it_step);
  const std::size_t n0 = topo.groups[0].allowed_lengths_um.size();
  const std::size_t n1 = topo.groups[1].allowed_lengths_um.size();

  std::vector<GridOptimum> per_row(g0.size());
  for (auto& r : per_row) r.area = std::numeric_limits<double>::infinity();

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(g0.size()); ++a) {
    GridOptimum& best = per_row[static_cast<std::size_t>(a)];
    DesignVector x;
    x.gmid = {g0[static_cast<std::size_t>(a)], 0.0};
    x.l_index = {0, 0};
    for (double gb : g1) {
      x.gmid[1] = gb;
      for (std::size_t l0 = 0; l0 < n0; ++l0) {
        x.l_index[0] = l0;
        for (std::size_t l1 = 0; l1 < n1; ++l1) {
          x.l_index[1] = l1;
          for (double it : its) {
            x.tail_current_ua = it;
            const auto verdict = survivability(x, luts, topo, goals);
            if (!verdict.pass) continue;
            const double area = verdict.metrics->gate_area_um2;
            if (area < best.area) best = {area, x};
          }
        }
      }
    }
  }
  GridOptimum out = per_row.front();
  for (const auto& r : per_row) {
    if (r.area < out.area) out = r;
  }
  return out;
}

}  // namespace gmswarm::testing
