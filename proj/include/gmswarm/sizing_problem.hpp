#pragma once

#include <cstddef>
#include <vector>

#include "gmswarm/circuit.hpp"
#include "gmswarm/pso.hpp"
#include "gmswarm/verify.hpp"

namespace gmswarm {

/// Circuit sizing as a swarm problem: survivability is the analytic filter,
/// verification goes through the backend, fitness is gate area.
/// Position layout: continuous = [gm/ID_1..n, I_T], discrete = [L index_1..n].
class SizingProblem final : public pso::Problem {
 public:
  SizingProblem(const LutSet& luts, TopologySpec topo, PerfGoals goals,
                const VerificationBackend& backend);

  bool survives(const pso::Position& x) const override;
  bool verify(const pso::Position& x) const override;
  double fitness(const pso::Position& x) const override;

  DesignVector to_design(const pso::Position& x) const;
  pso::Position to_position(const DesignVector& x) const;

  std::vector<std::size_t> choice_counts() const;
  std::vector<std::vector<double>> discrete_values() const;
  pso::Bounds make_bounds(const std::vector<pso::Range>& gmid, pso::Range tail_current) const;

  const TopologySpec& topology() const noexcept { return topo_; }
  const PerfGoals& goals() const noexcept { return goals_; }
  const LutSet& luts() const noexcept { return luts_; }

 private:
  const LutSet& luts_;
  TopologySpec topo_;
  PerfGoals goals_;
  const VerificationBackend& backend_;
};

}  // namespace gmswarm
