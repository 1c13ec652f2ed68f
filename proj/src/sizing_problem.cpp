#include "gmswarm/sizing_problem.hpp"

#include "gmswarm/error.hpp"

namespace gmswarm {

SizingProblem::SizingProblem(const LutSet& luts, TopologySpec topo, PerfGoals goals,
                             const VerificationBackend& backend)
    : luts_(luts), topo_(std::move(topo)), goals_(goals), backend_(backend) {
  topo_.validate();
}

DesignVector SizingProblem::to_design(const pso::Position& x) const {
  DesignVector d;
  const std::size_t n = topo_.group_count();
  d.gmid.assign(x.continuous.begin(), x.continuous.begin() + static_cast<std::ptrdiff_t>(n));
  d.tail_current_ua = x.continuous.at(n);
  d.l_index = x.discrete;
  return d;
}

pso::Position SizingProblem::to_position(const DesignVector& x) const {
  pso::Position p;
  p.continuous = x.gmid;
  p.continuous.push_back(x.tail_current_ua);
  p.discrete = x.l_index;
  return p;
}

bool SizingProblem::survives(const pso::Position& x) const {
  return survivability(to_design(x), luts_, topo_, goals_).pass;
}

bool SizingProblem::verify(const pso::Position& x) const {
  try {
    const SizingSolution s = size_circuit(to_design(x), luts_, topo_);
    const PerfMetrics m = backend_.evaluate(s, topo_);
    return check_goals(m, goals_, MissingMetric::fail).empty();
  } catch (const Error&) {
    // Simulator failures and timeouts reject the particle.
    return false;
  }
}

double SizingProblem::fitness(const pso::Position& x) const {
  return gmswarm::fitness(to_design(x), luts_, topo_);
}

std::vector<std::size_t> SizingProblem::choice_counts() const {
  std::vector<std::size_t> out;
  for (const auto& g : topo_.groups) out.push_back(g.allowed_lengths_um.size());
  return out;
}

std::vector<std::vector<double>> SizingProblem::discrete_values() const {
  std::vector<std::vector<double>> out;
  for (const auto& g : topo_.groups) out.push_back(g.allowed_lengths_um);
  return out;
}

pso::Bounds SizingProblem::make_bounds(const std::vector<pso::Range>& gmid,
                                       pso::Range tail_current) const {
  if (gmid.size() != topo_.group_count()) {
    throw Error(Errc::invalid_config, "bounds.gmid needs one range per group");
  }
  std::vector<pso::Range> all = gmid;
  all.push_back(tail_current);
  return pso::Bounds::make(std::move(all), gmid.size());
}

}  // namespace gmswarm
