#include "gmswarm/pso.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gmswarm/error.hpp"

namespace gmswarm::pso {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::invalid_config, what);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void push_trace(SwarmState& s) {
  TraceRow row;
  row.iter = s.t;
  row.gbest_fitness = s.gbest_fitness;
  row.gbest = s.gbest;
  row.surv_calls = s.surv_calls;
  row.verif_calls = s.verif_calls;
  row.elapsed_s = elapsed_since(s.started);
  s.trace.push_back(std::move(row));
}

// Runs body(i) for i in [0, n), serially or across OpenMP threads. The first
// exception (by index) is rethrown on the calling thread.
template <typename Body>
void for_each_index(std::size_t n, bool parallel, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SlotOutcome {
  Particle particle;
  EvalCounts counts;
  bool filled = false;
};

SlotOutcome fill_slot(const SwarmConfig& cfg, const Bounds& bounds, const DiscreteDist& dist,
                      const Problem& problem, std::uint64_t seed) {
  SlotOutcome out;
  Rng rng(seed);
  const std::size_t nc = bounds.size();
  Position x;
  x.continuous.resize(nc);
  for (std::size_t attempt = 0; attempt < cfg.init_attempt_cap(); ++attempt) {
    for (std::size_t k = 0; k < nc; ++k) {
      const Range& r = bounds.current[k];
      x.continuous[k] = r.lo + uniform01(rng) * r.span();
    }
    x.discrete = sample_discrete(dist, rng);
    ++out.counts.surv;
    if (!problem.survives(x)) continue;
    ++out.counts.verif;
    if (!problem.verify(x)) continue;

    Particle& p = out.particle;
    p.position = x;
    p.velocity.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) {
      p.velocity[k] = (2.0 * uniform01(rng) - 1.0) * 0.1 * bounds.current[k].span();
    }
    p.fitness = problem.fitness(x);
    p.best = x;
    p.best_fitness = p.fitness;
    p.feasible = true;
    out.filled = true;
    return out;
  }
  return out;
}

struct MoveOutcome {
  Particle particle;
  EvalCounts counts;
};

MoveOutcome advance_particle(const Particle& prev, const Position& gbest, Coefficients c,
                             const SwarmConfig& cfg, const Bounds& bounds,
                             const DiscreteDist& dist, const Problem& problem,
                             std::uint64_t seed) {
  MoveOutcome out;
  Rng rng(seed);
  Particle p = prev;
  const auto v = update_velocity(p, gbest, c, cfg.inertia, rng, cfg.per_dimension_random);
  update_position(p, v, bounds);
  p.position.discrete = sample_discrete(dist, rng);

  bool accepted = false;
  ++out.counts.surv;
  if (problem.survives(p.position)) {
    ++out.counts.verif;
    accepted = problem.verify(p.position);
  }
  if (!accepted) {
    accepted = recover(p, prev.position, prev.fitness, gbest, c, cfg, bounds, problem, rng,
                       out.counts)
                   .recovered;
  }
  if (accepted) {
    p.fitness = problem.fitness(p.position);
    if (p.fitness < p.best_fitness) {
      p.best = p.position;
      p.best_fitness = p.fitness;
    }
  }
  p.feasible = true;
  out.particle = std::move(p);
  return out;
}

}  // namespace

void SwarmConfig::validate() const {
  require(population >= 2 && population % 2 == 0, "swarm.population must be even and >= 2");
  require(inertia >= 0.0, "swarm.inertia must be >= 0");
  require(history_weight >= 0.0 && history_weight <= 1.0, "swarm.alpha must lie in [0, 1]");
  require(shrink_margin > 0.0, "swarm.delta must be > 0");
  require(c1_max >= c1_min && c2_max >= c2_min, "swarm coefficient max must be >= min");
}

Bounds Bounds::make(std::vector<Range> initial, std::size_t shrinkable_count) {
  for (const auto& r : initial) {
    if (!(r.lo < r.hi)) throw Error(Errc::invalid_config, "bounds need lower < upper");
  }
  Bounds b;
  b.current = initial;
  b.initial = std::move(initial);
  b.shrinkable.assign(b.initial.size(), false);
  for (std::size_t k = 0; k < std::min(shrinkable_count, b.initial.size()); ++k) {
    b.shrinkable[k] = true;
  }
  return b;
}

DiscreteDist DiscreteDist::uniform(const std::vector<std::size_t>& choice_counts) {
  DiscreteDist d;
  for (auto n : choice_counts) {
    if (n == 0) throw Error(Errc::invalid_config, "discrete variable with no choices");
    d.prob.emplace_back(n, 1.0 / static_cast<double>(n));
  }
  return d;
}

Coefficients coefficients(std::size_t t, const SwarmConfig& cfg) {
  if (cfg.iterations == 0) return {cfg.c1_max, cfg.c2_min};
  const double frac = static_cast<double>(t) / static_cast<double>(cfg.iterations);
  return {cfg.c1_max - (cfg.c1_max - cfg.c1_min) * frac,
          cfg.c2_min + (cfg.c2_max - cfg.c2_min) * frac};
}

std::vector<double> update_velocity(const Particle& p, const Position& gbest, Coefficients c,
                                    double inertia, double r1, double r2) {
  const auto& x = p.position.continuous;
  std::vector<double> v(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    v[k] = inertia * p.velocity[k] + c.c1 * r1 * (p.best.continuous[k] - x[k]) +
           c.c2 * r2 * (gbest.continuous[k] - x[k]);
  }
  return v;
}

std::vector<double> update_velocity(const Particle& p, const Position& gbest, Coefficients c,
                                    double inertia, Rng& rng, bool per_dimension) {
  if (!per_dimension) {
    const double r1 = uniform01(rng);
    const double r2 = uniform01(rng);
    return update_velocity(p, gbest, c, inertia, r1, r2);
  }
  const auto& x = p.position.continuous;
  std::vector<double> v(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r1 = uniform01(rng);
    const double r2 = uniform01(rng);
    v[k] = inertia * p.velocity[k] + c.c1 * r1 * (p.best.continuous[k] - x[k]) +
           c.c2 * r2 * (gbest.continuous[k] - x[k]);
  }
  return v;
}

void update_position(Particle& p, const std::vector<double>& velocity, const Bounds& bounds) {
  auto& x = p.position.continuous;
  p.velocity = velocity;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double moved = x[k] + velocity[k];
    const Range& r = bounds.current[k];
    if (moved < r.lo || moved > r.hi) {
      x[k] = std::clamp(moved, r.lo, r.hi);
      p.velocity[k] = 0.0;
    } else {
      x[k] = moved;
    }
  }
}

Bounds shrink_bounds(const Position& gbest, double margin, const Bounds& bounds) {
  Bounds out = bounds;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!out.shrinkable[k]) continue;
    const double centre = gbest.continuous[k];
    const Range& init = out.initial[k];
    out.current[k] = {std::max(init.lo, centre - margin), std::min(init.hi, centre + margin)};
  }
  return out;
}

DiscreteDist update_discrete_dist(const DiscreteDist& dist, const std::vector<Particle>& particles,
                                  double history_weight) {
  std::vector<std::size_t> order(particles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return particles[a].best_fitness < particles[b].best_fitness;
  });
  const std::size_t half = particles.size() / 2;
  DiscreteDist out = dist;
  if (half == 0) return out;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    std::vector<std::size_t> count(dist.prob[j].size(), 0);
    for (std::size_t e = 0; e < half; ++e) ++count[particles[order[e]].best.discrete[j]];
    for (std::size_t n = 0; n < count.size(); ++n) {
      out.prob[j][n] = history_weight * dist.prob[j][n] +
                       (1.0 - history_weight) * static_cast<double>(count[n]) /
                           static_cast<double>(half);
    }
  }
  return out;
}

std::vector<std::size_t> sample_discrete(const DiscreteDist& dist, Rng& rng) {
  std::vector<std::size_t> out(dist.size());
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const auto& p = dist.prob[j];
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = p.size();
    std::size_t last_nonzero = 0;
    for (std::size_t n = 0; n < p.size(); ++n) {
      if (p[n] > 0.0) last_nonzero = n;
      cum += p[n];
      if (pick == p.size() && u < cum) pick = n;
    }
    // Round-off can leave u above the final cumulative sum.
    out[j] = pick == p.size() ? last_nonzero : pick;
  }
  return out;
}

RecoveryResult recover(Particle& p, const Position& fallback, double fallback_fitness,
                       const Position& gbest, Coefficients c, const SwarmConfig& cfg,
                       const Bounds& bounds, const Problem& problem, Rng& rng,
                       EvalCounts& counts) {
  RecoveryResult result;
  for (std::size_t m = 0; m < cfg.recovery_limit; ++m) {
    ++result.attempts;
    const auto v = update_velocity(p, gbest, c, cfg.inertia, rng, cfg.per_dimension_random);
    update_position(p, v, bounds);
    ++counts.surv;
    if (!problem.survives(p.position)) continue;
    ++counts.verif;
    if (problem.verify(p.position)) {
      result.recovered = true;
      return result;
    }
  }
  p.position = fallback;
  p.fitness = fallback_fitness;
  std::fill(p.velocity.begin(), p.velocity.end(), 0.0);
  return result;
}

SwarmState init_swarm(const SwarmConfig& cfg, const Bounds& bounds, const DiscreteDist& dist,
                      const Problem& problem) {
  cfg.validate();
  SwarmState s;
  s.started = std::chrono::steady_clock::now();
  s.cfg = cfg;
  s.bounds = bounds;
  s.dist = dist;
  s.rng.seed(cfg.seed);

  std::vector<std::uint64_t> seeds(cfg.population);
  for (auto& seed : seeds) seed = s.rng();

  std::vector<SlotOutcome> slots(cfg.population);
  for_each_index(cfg.population, cfg.parallel_eval, [&](std::size_t i) {
    slots[i] = fill_slot(cfg, bounds, dist, problem, seeds[i]);
  });

  std::size_t unfilled = 0;
  for (auto& slot : slots) {
    s.surv_calls += slot.counts.surv;
    s.verif_calls += slot.counts.verif;
    if (!slot.filled) ++unfilled;
    s.particles.push_back(std::move(slot.particle));
  }
  if (unfilled != 0) {
    throw Error(Errc::init_exhausted,
                std::to_string(unfilled) + " of " + std::to_string(cfg.population) +
                    " slots found no feasible particle in " +
                    std::to_string(cfg.init_attempt_cap()) + " attempts");
  }

  s.gbest_fitness = std::numeric_limits<double>::infinity();
  for (const auto& p : s.particles) {
    if (p.best_fitness < s.gbest_fitness) {
      s.gbest_fitness = p.best_fitness;
      s.gbest = p.best;
    }
  }
  push_trace(s);
  return s;
}

void step(SwarmState& s, const Problem& problem) {
  const Coefficients c = coefficients(s.t + 1, s.cfg);
  const std::size_t n = s.particles.size();
  std::vector<std::uint64_t> seeds(n);
  for (auto& seed : seeds) seed = s.rng();

  std::vector<MoveOutcome> moves(n);
  for_each_index(n, s.cfg.parallel_eval, [&](std::size_t i) {
    moves[i] = advance_particle(s.particles[i], s.gbest, c, s.cfg, s.bounds, s.dist, problem,
                                seeds[i]);
  });

  bool improved = false;
  for (std::size_t i = 0; i < n; ++i) {
    s.surv_calls += moves[i].counts.surv;
    s.verif_calls += moves[i].counts.verif;
    s.particles[i] = std::move(moves[i].particle);
    if (s.particles[i].best_fitness < s.gbest_fitness) {
      s.gbest_fitness = s.particles[i].best_fitness;
      s.gbest = s.particles[i].best;
      improved = true;
    }
  }
  if (improved) s.bounds = shrink_bounds(s.gbest, s.cfg.shrink_margin, s.bounds);
  s.dist = update_discrete_dist(s.dist, s.particles, s.cfg.history_weight);
  ++s.t;
  push_trace(s);
}

RunResult run(const Problem& problem, const SwarmConfig& cfg, const Bounds& bounds,
              const DiscreteDist& dist) {
  SwarmState s = init_swarm(cfg, bounds, dist, problem);
  for (std::size_t t = 0; t < cfg.iterations; ++t) step(s, problem);
  return {s.gbest, s.gbest_fitness, std::move(s.trace), std::move(s.bounds), std::move(s.dist)};
}

std::string format_trace(const std::vector<TraceRow>& trace,
                         const std::vector<std::vector<double>>& discrete_values,
                         bool include_timing) {
  std::ostringstream os;
  const std::size_t groups = discrete_values.size();
  os << "iter,gbest_area_um2,gbest_IT_uA";
  for (std::size_t g = 1; g <= groups; ++g) os << ",gbest_gmid_" << g;
  for (std::size_t g = 1; g <= groups; ++g) os << ",gbest_L_" << g;
  os << ",surv_calls,verif_calls,elapsed_s\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (const auto& row : trace) {
    const auto& cont = row.gbest.continuous;
    os << row.iter << ',' << num(row.gbest_fitness) << ',' << num(cont.back());
    for (std::size_t g = 0; g < groups; ++g) os << ',' << num(cont[g]);
    for (std::size_t g = 0; g < groups; ++g) {
      os << ',' << num(discrete_values[g][row.gbest.discrete[g]]);
    }
    std::snprintf(buf, sizeof buf, "%.3f", include_timing ? row.elapsed_s : 0.0);
    os << ',' << row.surv_calls << ',' << row.verif_calls << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace gmswarm::pso
