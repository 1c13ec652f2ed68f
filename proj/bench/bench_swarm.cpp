// Serial vs OpenMP per-particle evaluation on the FDDA surrogate problem.

#include <benchmark/benchmark.h>

#include "gmswarm/circuit.hpp"
#include "gmswarm/lut.hpp"
#include "gmswarm/pso.hpp"
#include "gmswarm/sizing_problem.hpp"
#include "gmswarm/verify.hpp"

using namespace gmswarm;

namespace {

struct Fixture {
  LutSet luts;
  TopologySpec topo;
  SurrogateBackend backend;
  SizingProblem problem;
  pso::Bounds bounds;
  pso::DiscreteDist dist;

  static std::vector<double> lengths() {
    return {0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0};
  }

  Fixture()
      : luts{generate_synthetic_lut(DeviceKind::n_type, lengths(), {3, 26}, 93),
             generate_synthetic_lut(DeviceKind::p_type, lengths(), {3, 26}, 93)},
        topo(default_fdda_topology(lengths())),
        problem(luts, topo, fdda_goals(), backend) {
    std::vector<pso::Range> gmid{{15, 25}, {8, 16}, {8, 16}, {8, 16}, {8, 16}, {8, 16}};
    bounds = problem.make_bounds(gmid, {2, 10});
    dist = pso::DiscreteDist::uniform(problem.choice_counts());
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

pso::SwarmConfig config(bool parallel, std::int64_t population) {
  pso::SwarmConfig cfg;
  cfg.population = static_cast<std::size_t>(population);
  cfg.init_attempts_per_slot = 1000;
  cfg.parallel_eval = parallel;
  return cfg;
}

void BM_Init(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  auto cfg = config(parallel, state.range(0));
  for (auto _ : state) {
    auto s = pso::init_swarm(cfg, f.bounds, f.dist, f.problem);
    benchmark::DoNotOptimize(s.gbest_fitness);
  }
}

void BM_Run(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  auto cfg = config(parallel, state.range(0));
  cfg.iterations = 20;
  for (auto _ : state) {
    auto r = pso::run(f.problem, cfg, f.bounds, f.dist);
    benchmark::DoNotOptimize(r.best_fitness);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Init, serial, false)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Init, openmp, true)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Run, serial, false)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Run, openmp, true)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
