#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "gmswarm/error.hpp"
#include "gmswarm/pso.hpp"
#include "support/oracles.hpp"

using namespace gmswarm;
using namespace gmswarm::pso;
namespace gt = gmswarm::testing;

namespace {

Bounds box(std::size_t n, double lo, double hi, std::size_t shrinkable) {
  return Bounds::make(std::vector<Range>(n, Range{lo, hi}), shrinkable);
}

Particle particle_at(std::vector<double> x) {
  Particle p;
  p.position.continuous = x;
  p.best.continuous = x;
  p.velocity.assign(x.size(), 0.0);
  return p;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

SwarmConfig small_cfg(std::uint64_t seed) {
  SwarmConfig cfg;
  cfg.population = 10;
  cfg.iterations = 15;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("coefficients follow the linear schedule") {
  SwarmConfig cfg;
  CHECK(coefficients(0, cfg).c1 == 2.0);
  CHECK(coefficients(0, cfg).c2 == 1.0);
  CHECK(coefficients(60, cfg).c1 == 1.0);
  CHECK(coefficients(60, cfg).c2 == 2.0);
  CHECK(coefficients(30, cfg).c1 == 1.5);
  CHECK(coefficients(30, cfg).c2 == 1.5);
}

TEST_CASE("update_velocity") {
  Particle p = particle_at({5.0});
  auto v = update_velocity(p, p.position, {2, 1}, 0.5, 1.0, 1.0);
  CHECK(v == std::vector<double>{0.0});

  p.velocity = {2.0};
  p.best.continuous = {6.0};
  Position g{{8.0}, {}};
  CHECK(update_velocity(p, g, {2, 1}, 0.5, 1.0, 1.0)[0] == 6.0);
  CHECK(update_velocity(p, g, {0, 0}, 0.5, 0.3, 0.9)[0] == 1.0);

  // a single pair of scalars scales every component
  Particle q = particle_at({1, 2, 3});
  q.best.continuous = {2, 4, 6};
  Position gq{{0, 0, 0}, {}};
  auto vq = update_velocity(q, gq, {1, 0}, 0.0, 0.5, 0.0);
  CHECK(vq == std::vector<double>{0.5, 1.0, 1.5});
}

TEST_CASE("update_position clips and zeroes") {
  auto b = box(1, 5, 15, 1);
  Particle p = particle_at({10.0});
  update_position(p, {0.5}, b);
  CHECK(p.position.continuous[0] == 10.5);
  CHECK(p.velocity[0] == 0.5);

  p.position.continuous = {14.8};
  update_position(p, {1.0}, b);
  CHECK(p.position.continuous[0] == 15.0);
  CHECK(p.velocity[0] == 0.0);

  update_position(p, {0.0}, b);
  CHECK(p.position.continuous[0] == 15.0);
}

TEST_CASE("shrink_bounds") {
  auto b = Bounds::make({{5, 20}, {5, 14.5}, {1, 20}}, 2);
  Position g{{14.0, 14.0, 3.0}, {}};
  auto s = shrink_bounds(g, 1.0, b);
  CHECK(s.current[0] == Range{13, 15});
  CHECK(s.current[1] == Range{13, 14.5});
  CHECK(s.current[2] == Range{1, 20});
  CHECK(s.initial == b.initial);
}

TEST_CASE("update_discrete_dist") {
  DiscreteDist d = DiscreteDist::uniform({4});
  std::vector<Particle> ps(20);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].best_fitness = static_cast<double>(i);
    ps[i].best.discrete = {i < 10 ? std::size_t{1} : std::size_t{3}};
  }
  auto out = update_discrete_dist(d, ps, 0.7);
  CHECK(out.prob[0][0] == doctest::Approx(0.175).epsilon(1e-15));
  CHECK(out.prob[0][1] == doctest::Approx(0.475).epsilon(1e-15));
  CHECK(out.prob[0][2] == doctest::Approx(0.175).epsilon(1e-15));
  CHECK(out.prob[0][3] == doctest::Approx(0.175).epsilon(1e-15));
  CHECK(update_discrete_dist(d, ps, 1.0) == d);
  auto emp = update_discrete_dist(d, ps, 0.0);
  CHECK(emp.prob[0] == std::vector<double>{0.0, 1.0, 0.0, 0.0});

  // ties go to the lower index
  for (auto& p : ps) p.best_fitness = 1.0;
  CHECK(update_discrete_dist(d, ps, 0.0).prob[0] == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("sample_discrete") {
  DiscreteDist d;
  d.prob = {{0.0, 0.0, 1.0, 0.0}};
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) CHECK(sample_discrete(d, rng)[0] == 2);

  d.prob = {{0.1, 0.2, 0.3, 0.4}, {0.5, 0.5}};
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(sample_discrete(d, a) == sample_discrete(d, b));

  Rng r(7);
  constexpr int kDraws = 100000;
  std::vector<int> count(4, 0);
  for (int k = 0; k < kDraws; ++k) ++count[sample_discrete(d, r)[0]];
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(std::abs(static_cast<double>(count[n]) / kDraws - d.prob[0][n]) <= 0.01);
  }
}

TEST_CASE("init_swarm counting contract") {
  gt::CallbackProblem prob;
  SwarmConfig cfg;
  auto s = init_swarm(cfg, box(7, 5, 25, 6), DiscreteDist::uniform({10, 10}), prob);
  CHECK(s.particles.size() == 20);
  CHECK(prob.verif_calls == 20);
  CHECK(s.verif_calls == 20);
  CHECK(s.trace.size() == 1);
  for (const auto& p : s.particles) {
    for (std::size_t k = 0; k < 7; ++k) {
      CHECK(std::abs(p.velocity[k]) <= 2.0 + 1e-12);
      CHECK(p.position.continuous[k] >= 5.0);
      CHECK(p.position.continuous[k] <= 25.0);
    }
  }
}

TEST_CASE("init_swarm never verifies without survival") {
  gt::CallbackProblem prob;
  prob.survives_fn = [](const Position&) { return false; };
  SwarmConfig cfg;
  cfg.population = 4;
  try {
    init_swarm(cfg, box(2, 0, 1, 1), DiscreteDist::uniform({3}), prob);
    FAIL("expected InitExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::init_exhausted);
  }
  CHECK(prob.verif_calls == 0);
  CHECK(prob.surv_calls == 4 * 40);
}

TEST_CASE("init_swarm is seed-deterministic") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(99);
  auto a = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  auto b = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  CHECK(a.particles == b.particles);
  cfg.seed = 100;
  auto c = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  CHECK_FALSE(a.particles == c.particles);
}

TEST_CASE("recover accepts the k-th candidate") {
  SwarmConfig cfg;
  const auto b = box(3, 0, 10, 2);
  for (std::size_t k = 1; k <= cfg.recovery_limit; ++k) {
    gt::CallbackProblem prob;
    std::atomic<std::size_t> seen{0};
    prob.verify_fn = [&](const Position&) { return ++seen == k; };
    Particle p = particle_at({5, 5, 5});
    p.best.continuous = {6, 6, 6};
    Position fallback = p.position;
    Rng rng(3);
    EvalCounts counts;
    auto r = recover(p, fallback, 1.0, Position{{2, 2, 2}, {}}, {2, 1}, cfg, b, prob, rng, counts);
    CHECK(r.recovered);
    CHECK(r.attempts == k);
    CHECK(prob.surv_calls == k);
    CHECK(prob.verif_calls == k);
    CHECK(prob.was_verified(p.position));
  }
}

TEST_CASE("recover gives up and reverts") {
  SwarmConfig cfg;
  gt::CallbackProblem prob;
  prob.verify_fn = [](const Position&) { return false; };
  Particle p = particle_at({5, 5});
  p.velocity = {1, 1};
  p.best.continuous = {8, 8};
  Position fallback{{4, 4}, {}};
  Rng rng(3);
  EvalCounts counts;
  auto r = recover(p, fallback, 7.0, Position{{1, 1}, {}}, {2, 1}, cfg, box(2, 0, 10, 2), prob,
                   rng, counts);
  CHECK_FALSE(r.recovered);
  CHECK(r.attempts == 5);
  CHECK(prob.surv_calls == 5);
  CHECK(p.position == fallback);
  CHECK(p.fitness == 7.0);
  CHECK(p.velocity == std::vector<double>{0, 0});

  cfg.recovery_limit = 0;
  gt::CallbackProblem none;
  auto r0 = recover(p, fallback, 7.0, Position{{1, 1}, {}}, {2, 1}, cfg, box(2, 0, 10, 2), none,
                    rng, counts);
  CHECK_FALSE(r0.recovered);
  CHECK(r0.attempts == 0);
  CHECK(none.surv_calls == 0);
  CHECK(none.verif_calls == 0);
}

TEST_CASE("step keeps the best and counts evaluations") {
  gt::CallbackProblem prob;
  SwarmConfig cfg;
  cfg.population = 8;
  cfg.iterations = 3;
  auto s = init_swarm(cfg, box(3, -5, 5, 2), DiscreteDist::uniform({2}), prob);
  for (int k = 0; k < 3; ++k) {
    const double before = s.gbest_fitness;
    const std::size_t surv_before = s.surv_calls;
    step(s, prob);
    CHECK(s.gbest_fitness <= before);
    CHECK(s.surv_calls >= surv_before + cfg.population);
  }
  CHECK(s.surv_calls == prob.surv_calls);
  CHECK(s.verif_calls == prob.verif_calls);
  CHECK(s.trace.size() == 4);
}

TEST_CASE("step is deterministic") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(5);
  auto a = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  auto b = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  step(a, ms);
  step(b, ms);
  CHECK(a.particles == b.particles);
  CHECK(a.gbest == b.gbest);
  CHECK(a.bounds == b.bounds);
  CHECK(a.dist == b.dist);
}

TEST_CASE("velocities decay geometrically without attraction") {
  gt::CallbackProblem prob;
  SwarmConfig cfg;
  cfg.population = 4;
  cfg.c1_max = cfg.c1_min = cfg.c2_max = cfg.c2_min = 0.0;
  cfg.inertia = 0.5;
  // start away from the walls so no component is ever clipped
  bool initialising = true;
  prob.survives_fn = [&](const Position& x) {
    if (!initialising) return true;
    for (double v : x.continuous) {
      if (std::abs(v) > 75.0) return false;
    }
    return true;
  };
  auto s = init_swarm(cfg, box(3, -100, 100, 0), DiscreteDist::uniform({2}), prob);
  initialising = false;
  std::vector<std::vector<double>> v0;
  for (const auto& p : s.particles) v0.push_back(p.velocity);
  for (int t = 1; t <= 6; ++t) {
    step(s, prob);
    for (std::size_t i = 0; i < s.particles.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(s.particles[i].velocity[k] == std::ldexp(v0[i][k], -t));
      }
    }
  }
}

TEST_CASE("swarm invariants over a run") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(3);
  cfg.iterations = 30;
  auto s = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  bool improved_once = false;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const double before = s.gbest_fitness;
    step(s, ms);
    if (s.gbest_fitness < before) improved_once = true;
    for (std::size_t k = 0; k < s.bounds.size(); ++k) {
      CHECK(s.bounds.current[k].lo >= s.bounds.initial[k].lo);
      CHECK(s.bounds.current[k].hi <= s.bounds.initial[k].hi);
      if (improved_once && s.bounds.shrinkable[k]) {
        CHECK(s.bounds.current[k].span() <= 2.0 * cfg.shrink_margin + 1e-12);
      }
    }
    CHECK(s.bounds.current.back() == s.bounds.initial.back());
    for (const auto& row : s.dist.prob) {
      CHECK(std::abs(sum_of(row) - 1.0) <= 1e-9);
      for (double v : row) CHECK(v >= 0.0);
    }
    double min_best = 1e300;
    for (const auto& p : s.particles) {
      CHECK(ms.survives(p.best));
      CHECK(ms.verify(p.best));
      CHECK(ms.survives(p.position));
      CHECK(ms.verify(p.position));
      min_best = std::min(min_best, p.best_fitness);
    }
    CHECK(s.gbest_fitness == min_best);
  }
  for (std::size_t t = 1; t < s.trace.size(); ++t) {
    CHECK(s.trace[t].gbest_fitness <= s.trace[t - 1].gbest_fitness);
  }
}

TEST_CASE("run bookkeeping") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(8);
  auto r = run(ms, cfg, ms.bounds(), ms.dist());
  CHECK(r.trace.size() == cfg.iterations + 1);
  CHECK(r.trace.back().gbest_fitness == r.best_fitness);
  CHECK(ms.fitness(r.best) == r.best_fitness);

  cfg.iterations = 0;
  auto r0 = run(ms, cfg, ms.bounds(), ms.dist());
  CHECK(r0.trace.size() == 1);
  auto s0 = init_swarm(cfg, ms.bounds(), ms.dist(), ms);
  CHECK(r0.best_fitness == s0.gbest_fitness);
}

TEST_CASE("mixed benchmark runs stay above the optimum and improve on initialisation") {
  gt::MixedSphere ms;
  const double opt = ms.optimum();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SwarmConfig cfg;
    cfg.seed = seed;
    auto r = run(ms, cfg, ms.bounds(), ms.dist());
    MESSAGE("seed " << seed << " best " << r.best_fitness << " optimum " << opt);
    CHECK(r.best_fitness >= opt - 1e-9);
    CHECK(r.best_fitness < r.trace.front().gbest_fitness);
    CHECK(ms.verify(r.best));
  }
}

TEST_CASE("serial and parallel evaluation give identical traces") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(21);
  cfg.parallel_eval = false;
  auto a = run(ms, cfg, ms.bounds(), ms.dist());
  cfg.parallel_eval = true;
  auto b = run(ms, cfg, ms.bounds(), ms.dist());
  const std::vector<std::vector<double>> values(6, ms.lengths);
  CHECK(format_trace(a.trace, values, false) == format_trace(b.trace, values, false));
  CHECK(a.best == b.best);
}

TEST_CASE("trace format") {
  gt::MixedSphere ms;
  auto cfg = small_cfg(2);
  cfg.iterations = 2;
  auto r = run(ms, cfg, ms.bounds(), ms.dist());
  const std::vector<std::vector<double>> values(6, ms.lengths);
  auto text = format_trace(r.trace, values, false);
  CHECK(text.rfind(
            "iter,gbest_area_um2,gbest_IT_uA,gbest_gmid_1,gbest_gmid_2,gbest_gmid_3,gbest_gmid_4,"
            "gbest_gmid_5,gbest_gmid_6,gbest_L_1,gbest_L_2,gbest_L_3,gbest_L_4,gbest_L_5,"
            "gbest_L_6,surv_calls,verif_calls,elapsed_s\n",
            0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("config validation") {
  SwarmConfig cfg;
  cfg.population = 7;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.population = 20;
  cfg.history_weight = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.history_weight = 0.7;
  cfg.shrink_margin = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
