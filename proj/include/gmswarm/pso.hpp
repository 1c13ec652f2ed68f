#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gmswarm::pso {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Mixed-variable position. By convention the last continuous component is
/// the tail current and the others are gm/ID values, one per discrete length.
struct Position {
  std::vector<double> continuous;
  std::vector<std::size_t> discrete;

  bool operator==(const Position&) const = default;
};

/// Feasibility and objective callbacks. All three must be safe to call
/// concurrently when SwarmConfig::parallel_eval is set.
class Problem {
 public:
  virtual ~Problem() = default;

  /// Cheap analytic filter.
  virtual bool survives(const Position& x) const = 0;
  /// Expensive check; only called on positions that survived.
  virtual bool verify(const Position& x) const = 0;
  /// Only called on positions that passed both tests.
  virtual double fitness(const Position& x) const = 0;
};

struct SwarmConfig {
  std::size_t population = 20;
  std::size_t iterations = 60;
  double inertia = 0.5;
  double c1_max = 2.0;
  double c1_min = 1.0;
  double c2_max = 2.0;
  double c2_min = 1.0;
  double shrink_margin = 1.0;
  std::size_t recovery_limit = 5;
  double history_weight = 0.7;
  std::uint64_t seed = 1;
  std::size_t init_attempts_per_slot = 0;  // 0 means 10 * population
  bool per_dimension_random = false;
  bool parallel_eval = false;

  std::size_t init_attempt_cap() const noexcept {
    return init_attempts_per_slot != 0 ? init_attempts_per_slot : 10 * population;
  }
  /// Throws Error(Errc::invalid_config).
  void validate() const;

  bool operator==(const SwarmConfig&) const = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double span() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  bool operator==(const Range&) const = default;
};

struct Bounds {
  std::vector<Range> initial;
  std::vector<Range> current;
  std::vector<bool> shrinkable;

  /// The first `shrinkable_count` variables take part in bound shrinkage.
  static Bounds make(std::vector<Range> initial, std::size_t shrinkable_count);
  std::size_t size() const noexcept { return current.size(); }

  bool operator==(const Bounds&) const = default;
};

struct DiscreteDist {
  std::vector<std::vector<double>> prob;

  static DiscreteDist uniform(const std::vector<std::size_t>& choice_counts);
  std::size_t size() const noexcept { return prob.size(); }

  bool operator==(const DiscreteDist&) const = default;
};

struct Particle {
  Position position;
  std::vector<double> velocity;
  double fitness = 0.0;
  Position best;
  double best_fitness = 0.0;
  bool feasible = false;

  bool operator==(const Particle&) const = default;
};

struct TraceRow {
  std::size_t iter = 0;
  double gbest_fitness = 0.0;
  Position gbest;
  std::size_t surv_calls = 0;
  std::size_t verif_calls = 0;
  double elapsed_s = 0.0;

  bool operator==(const TraceRow&) const = default;
};

struct SwarmState {
  SwarmConfig cfg;
  std::vector<Particle> particles;
  Position gbest;
  double gbest_fitness = 0.0;
  Bounds bounds;
  DiscreteDist dist;
  std::size_t t = 0;  // completed iterations
  Rng rng;
  std::size_t surv_calls = 0;
  std::size_t verif_calls = 0;
  std::vector<TraceRow> trace;
  std::chrono::steady_clock::time_point started;
};

struct Coefficients {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// c1 falls linearly from c1_max to c1_min, c2 rises from c2_min to c2_max.
Coefficients coefficients(std::size_t t, const SwarmConfig& cfg);

/// Inertia plus cognitive and social pulls with scalars r1, r2 shared by
/// every continuous component.
std::vector<double> update_velocity(const Particle& p, const Position& gbest, Coefficients c,
                                    double inertia, double r1, double r2);
/// Draws r1, r2 (or one pair per component when per_dimension is set).
std::vector<double> update_velocity(const Particle& p, const Position& gbest, Coefficients c,
                                    double inertia, Rng& rng, bool per_dimension = false);

/// x += v, clipped into the current bounds. The stored velocity is v with
/// clipped components zeroed.
void update_position(Particle& p, const std::vector<double>& velocity, const Bounds& bounds);

/// Recentres every shrinkable range on the best position with half-width
/// `margin`, intersected with the initial range. Other ranges are untouched.
Bounds shrink_bounds(const Position& gbest, double margin, const Bounds& bounds);

/// Blends the history with the value frequencies of the elite half (lowest
/// personal-best fitness, ties by particle index).
DiscreteDist update_discrete_dist(const DiscreteDist& dist, const std::vector<Particle>& particles,
                                  double history_weight);

std::vector<std::size_t> sample_discrete(const DiscreteDist& dist, Rng& rng);

struct EvalCounts {
  std::size_t surv = 0;
  std::size_t verif = 0;
};

struct RecoveryResult {
  bool recovered = false;
  std::size_t attempts = 0;
};

/// `p` holds the rejected candidate. Up to cfg.recovery_limit further
/// velocity/position updates are tried, discrete part fixed. On failure `p`
/// goes back to `fallback` with zero velocity.
RecoveryResult recover(Particle& p, const Position& fallback, double fallback_fitness,
                       const Position& gbest, Coefficients c, const SwarmConfig& cfg,
                       const Bounds& bounds, const Problem& problem, Rng& rng, EvalCounts& counts);

/// Throws Error(Errc::init_exhausted) when a slot cannot be filled.
SwarmState init_swarm(const SwarmConfig& cfg, const Bounds& bounds, const DiscreteDist& dist,
                      const Problem& problem);

void step(SwarmState& state, const Problem& problem);

struct RunResult {
  Position best;
  double best_fitness = 0.0;
  std::vector<TraceRow> trace;
  Bounds final_bounds;
  DiscreteDist final_dist;
};

RunResult run(const Problem& problem, const SwarmConfig& cfg, const Bounds& bounds,
              const DiscreteDist& dist);

/// Column layout: iter,gbest_area_um2,gbest_IT_uA,gbest_gmid_1..G,gbest_L_1..G,
/// surv_calls,verif_calls,elapsed_s. `discrete_values[j][n]` maps an index
/// to the length it stands for. With `include_timing` off, elapsed_s is
/// written as 0 so that reruns compare byte-for-byte.
std::string format_trace(const std::vector<TraceRow>& trace,
                         const std::vector<std::vector<double>>& discrete_values,
                         bool include_timing = true);

}  // namespace gmswarm::pso
