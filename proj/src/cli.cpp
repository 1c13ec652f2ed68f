#include "gmswarm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <memory>
#include <ostream>
#include <sstream>

#include "gmswarm/config.hpp"
#include "gmswarm/error.hpp"
#include "gmswarm/lut.hpp"
#include "gmswarm/pso.hpp"
#include "gmswarm/report.hpp"
#include "gmswarm/sizing_problem.hpp"
#include "gmswarm/text.hpp"
#include "gmswarm/verify.hpp"

namespace gmswarm::cli {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Config, tables and backend shared by optimize and evaluate.
struct Session {
  RunConfig cfg;
  LutSet luts;
  std::unique_ptr<VerificationBackend> backend;
};

Session open_session(const std::filesystem::path& path, const std::vector<std::string>& sets) {
  Session s;
  auto j = load_config_json(path);
  for (const auto& set : sets) apply_override(j, set);
  s.cfg = parse_run_config(j, path.parent_path());
  if (const char* env = std::getenv("GMSWARM_SIM"); env != nullptr && *env != '\0') {
    s.cfg.backend.simulator_path = env;
  }
  validate_paths(s.cfg);
  try {
    s.luts.n_type = load_lut(s.cfg.resolve(s.cfg.lut_n_type), DeviceKind::n_type);
    s.luts.p_type = load_lut(s.cfg.resolve(s.cfg.lut_p_type), DeviceKind::p_type);
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, std::string("luts: ") + e.what());
  }
  for (const auto& g : s.cfg.topology.groups) {
    for (double l : g.allowed_lengths_um) {
      if (!s.luts.get(g.kind).has_length(l)) {
        throw Error(Errc::invalid_config, "lengths: " + fmt("%g", l) + " um for group " + g.name +
                                              " is not in the " +
                                              std::string(to_string(g.kind)) + " table");
      }
    }
  }
  if (s.cfg.backend.kind == BackendConfig::Kind::surrogate) {
    s.backend = std::make_unique<SurrogateBackend>();
  } else {
    SimulatorOptions o;
    o.simulator = s.cfg.backend.simulator_path;
    o.template_dir = s.cfg.resolve(s.cfg.backend.template_dir);
    o.timeout_s = s.cfg.backend.timeout_s;
    o.extra_values.insert(s.cfg.backend.vars.begin(), s.cfg.backend.vars.end());
    try {
      s.backend = std::make_unique<SimulatorBackend>(std::move(o));
    } catch (const Error& e) {
      throw Error(Errc::invalid_config, std::string("backend: ") + e.what());
    }
  }
  return s;
}

bool is_input_error(Errc c) {
  return c == Errc::invalid_config || c == Errc::io_error || c == Errc::invalid_sizing;
}

void print_metrics(std::ostream& out, const PerfMetrics& m) {
  auto line = [&](const char* name, const std::optional<double>& v, const char* pattern) {
    out << name << '=' << (v ? fmt(pattern, *v) : std::string("unset")) << '\n';
  };
  out << "gate_area_um2=" << fmt("%.2f", m.gate_area_um2) << '\n';
  line("av0_db", m.av0_db, "%.2f");
  line("gbw_hz", m.gbw_hz, "%.6g");
  line("pm_deg", m.pm_deg, "%.2f");
  line("sr_v_per_us", m.sr_v_per_us, "%.3f");
  line("cmrr_db", m.cmrr_db, "%.2f");
  line("psrr_db", m.psrr_db, "%.2f");
  out << "power_uw=" << fmt("%.2f", m.power_uw) << '\n';
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double best_area = 0.0;
  double wall_s = 0.0;
};

SeedOutcome run_seed(const Session& s, std::uint64_t seed, const std::filesystem::path& out_dir,
                     bool timing) {
  SeedOutcome r;
  r.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  SizingProblem problem(s.luts, s.cfg.topology, s.cfg.goals, *s.backend);
  pso::SwarmConfig swarm = s.cfg.swarm;
  swarm.seed = seed;
  const auto bounds = problem.make_bounds(s.cfg.gmid_bounds, s.cfg.tail_current_bounds);
  const auto dist = pso::DiscreteDist::uniform(problem.choice_counts());
  pso::RunResult result;
  try {
    result = pso::run(problem, swarm, bounds, dist);
  } catch (const Error& e) {
    if (e.code() != Errc::init_exhausted) throw;
    r.error = e.what();
    return r;
  }
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.ok = true;
  r.best_area = result.best_fitness;

  const auto tag = std::to_string(seed);
  write_file(out_dir / ("trace_seed" + tag + ".csv"),
             pso::format_trace(result.trace, problem.discrete_values(), timing));

  const DesignVector best = problem.to_design(result.best);
  const SizingSolution sizing = size_circuit(best, s.luts, s.cfg.topology);
  SizingFile file;
  file.tail_current_ua = best.tail_current_ua;
  for (std::size_t i = 0; i < sizing.groups.size(); ++i) {
    file.groups.push_back({s.cfg.topology.groups[i].name, sizing.groups[i].width_um,
                           sizing.groups[i].length_um});
  }
  std::ostringstream report;
  report << "# seed=" << seed << '\n';
  report << "# gate_area_um2=" << fmt("%.6f", result.best_fitness) << '\n';
  for (std::size_t i = 0; i < best.gmid.size(); ++i) {
    report << "# gmid_" << i + 1 << '=' << fmt("%.6f", best.gmid[i]) << '\n';
  }
  report << format_sizing(file);
  write_file(out_dir / ("best_seed" + tag + ".csv"), report.str());
  return r;
}

}  // namespace

std::vector<double> default_lut_lengths() {
  return {0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0};
}

SizingFile parse_sizing(std::string_view text) {
  SizingFile f;
  bool header_seen = false;
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      constexpr std::string_view key = "tail_current_uA=";
      if (body.starts_with(key)) {
        auto v = parse_double(trim(body.substr(key.size())));
        if (!v || !(*v > 0.0)) throw Error(Errc::invalid_sizing, "bad tail_current_uA comment");
        f.tail_current_ua = *v;
      }
      continue;
    }
    auto fields = split(line, ',');
    if (!header_seen) {
      if (fields.size() != 3 || trim(fields[0]) != "group" || trim(fields[1]) != "W_um" ||
          trim(fields[2]) != "L_um") {
        throw Error(Errc::invalid_sizing, "expected header group,W_um,L_um");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) throw Error(Errc::invalid_sizing, "expected 3 fields: " + std::string(line));
    auto w = parse_double(trim(fields[1]));
    auto l = parse_double(trim(fields[2]));
    if (!w || !l) throw Error(Errc::invalid_sizing, "non-numeric W/L: " + std::string(line));
    if (!(*w > 0.0) || !(*l > 0.0)) {
      throw Error(Errc::invalid_sizing, "W and L must be > 0 for group " + std::string(trim(fields[0])));
    }
    f.groups.push_back({std::string(trim(fields[0])), *w, *l});
  }
  if (f.groups.empty()) throw Error(Errc::invalid_sizing, "no groups listed");
  return f;
}

std::string format_sizing(const SizingFile& sizing) {
  std::ostringstream os;
  if (sizing.tail_current_ua) {
    os << "# tail_current_uA=" << fmt("%.9g", *sizing.tail_current_ua) << '\n';
  }
  os << "group,W_um,L_um\n";
  for (const auto& g : sizing.groups) {
    os << g.name << ',' << fmt("%.4f", g.width_um) << ',' << fmt("%.4f", g.length_um) << '\n';
  }
  return os.str();
}

int cmd_optimize(const OptimizeOptions& opts, std::ostream& out, std::ostream& err) {
  Session s;
  try {
    s = open_session(opts.config, opts.sets);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  const std::vector<std::uint64_t> seeds = opts.seeds.empty() ? s.cfg.seeds : opts.seeds;
  const std::filesystem::path out_dir = opts.out ? *opts.out : s.cfg.resolve(s.cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<SeedOutcome> outcomes(seeds.size());
  const std::size_t width = std::max<std::size_t>(1, opts.parallel_seeds);
  try {
    for (std::size_t begin = 0; begin < seeds.size(); begin += width) {
      const std::size_t end = std::min(seeds.size(), begin + width);
      if (width == 1) {
        outcomes[begin] = run_seed(s, seeds[begin], out_dir, opts.timing);
        continue;
      }
      std::vector<std::future<SeedOutcome>> batch;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(std::async(std::launch::async, run_seed, std::cref(s), seeds[i],
                                   std::cref(out_dir), opts.timing));
      }
      for (std::size_t i = begin; i < end; ++i) outcomes[i] = batch[i - begin].get();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kInvalidInput : kSimulatorFailure;
  }

  std::ostringstream summary;
  summary << "seed,best_area_um2,wall_s,status\n";
  std::vector<double> areas;
  bool exhausted = false;
  for (const auto& o : outcomes) {
    if (o.ok) {
      areas.push_back(o.best_area);
      summary << o.seed << ',' << fmt("%.6f", o.best_area) << ','
              << fmt("%.3f", opts.timing ? o.wall_s : 0.0) << ",ok\n";
      out << "seed " << o.seed << ": best gate area " << fmt("%.4f", o.best_area) << " um^2 ("
          << fmt("%.1f", o.wall_s) << " s)\n";
    } else {
      exhausted = true;
      summary << o.seed << ",,,init_exhausted\n";
      err << "seed " << o.seed << ": " << o.error << '\n';
    }
  }
  if (!areas.empty()) {
    const auto st = spread(areas);
    summary << "# best=" << fmt("%.6f", st.best) << " median=" << fmt("%.6f", st.median)
            << " worst=" << fmt("%.6f", st.worst) << '\n';
    out << "best=" << fmt("%.4f", st.best) << " median=" << fmt("%.4f", st.median)
        << " worst=" << fmt("%.4f", st.worst) << " um^2 over " << areas.size() << " run(s)\n";
  }
  write_file(out_dir / "summary.csv", summary.str());
  return exhausted ? kInitExhausted : kOk;
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
  Session s;
  SizingFile sizing;
  try {
    s = open_session(opts.config, opts.sets);
    sizing = parse_sizing(read_file(opts.sizing));
    if (sizing.groups.size() != s.cfg.topology.group_count()) {
      throw Error(Errc::invalid_sizing, "sizing lists " + std::to_string(sizing.groups.size()) +
                                            " groups, topology has " +
                                            std::to_string(s.cfg.topology.group_count()));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  const TopologySpec& topo = s.cfg.topology;
  const auto tail = opts.tail_current_ua ? opts.tail_current_ua : sizing.tail_current_ua;

  PerfMetrics m;
  m.gate_area_um2 = gate_area(sizing.groups, topo);
  if (tail) {
    try {
      const SizingSolution sol = sizing_from_dimensions(sizing.groups, *tail, s.luts, topo);
      m = s.backend->evaluate(sol, topo);
      m.gate_area_um2 = gate_area(sizing.groups, topo);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      if (e.code() == Errc::invalid_sizing) return kInvalidInput;
      if (e.code() == Errc::gmid_out_of_range || e.code() == Errc::length_not_in_grid) {
        return kGoalsFailed;
      }
      return kSimulatorFailure;
    }
  } else {
    out << "# no tail current given: only gate area is evaluated\n";
  }
  print_metrics(out, m);

  const auto failed = check_goals(m, s.cfg.goals, MissingMetric::fail);
  auto report_goal = [&](Constraint c, const std::optional<double>& goal) {
    if (!goal) return;
    const bool bad = std::find(failed.begin(), failed.end(), c) != failed.end();
    out << "goal " << constraint_name(c) << ": " << (bad ? "FAIL" : "pass") << '\n';
  };
  const PerfGoals& g = s.cfg.goals;
  report_goal(Constraint::av0, g.min_av0_db);
  report_goal(Constraint::gbw, g.min_gbw_hz);
  report_goal(Constraint::phase_margin, g.min_pm_deg);
  report_goal(Constraint::slew_rate, g.min_sr_v_per_us);
  report_goal(Constraint::cmrr, g.min_cmrr_db);
  report_goal(Constraint::psrr, g.min_psrr_db);
  report_goal(Constraint::power, g.max_power_uw);
  return failed.empty() ? kOk : kGoalsFailed;
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.traces.empty()) {
    err << "error: no trace files given\n";
    return kInvalidInput;
  }
  if (!(opts.reference_area_um2 > 0.0)) {
    err << "error: reference area must be > 0\n";
    return kInvalidInput;
  }
  std::vector<double> bests;
  out << "trace,rows,initial_um2,best_um2,elapsed_s,monotone\n";
  for (const auto& path : opts.traces) {
    TraceSummary t;
    try {
      t = read_trace(path);
    } catch (const Error& e) {
      err << "error: " << path.string() << ": " << e.what() << '\n';
      return kInvalidInput;
    }
    bests.push_back(t.best_area_um2);
    out << path.filename().string() << ',' << t.rows << ',' << fmt("%.4f", t.first_area_um2) << ','
        << fmt("%.4f", t.best_area_um2) << ',' << fmt("%.3f", t.elapsed_s) << ','
        << (t.monotone ? "yes" : "no") << '\n';
  }
  const auto st = spread(bests);
  out << "best=" << fmt("%.4f", st.best) << " median=" << fmt("%.4f", st.median)
      << " worst=" << fmt("%.4f", st.worst) << '\n';
  out << "reference_um2=" << fmt("%.4f", opts.reference_area_um2) << '\n';
  out << "reduction_pct=" << fmt("%.2f", reduction_pct(st.best, opts.reference_area_um2)) << '\n';
  return kOk;
}

int cmd_gen_lut(const GenLutOptions& opts, std::ostream& out, std::ostream& err) {
  auto kind = parse_device_kind(opts.kind);
  if (!kind) {
    err << "error: --kind must be n_type or p_type\n";
    return kInvalidInput;
  }
  try {
    const auto lengths = opts.lengths_um.empty() ? default_lut_lengths() : opts.lengths_um;
    const auto lut =
        generate_synthetic_lut(*kind, lengths, {opts.gmid_min, opts.gmid_max}, opts.samples);
    write_lut(lut, opts.out);
    out << "wrote " << opts.out.string() << " (" << lengths.size() << " lengths x "
        << opts.samples << " samples)\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kOk;
}

}  // namespace gmswarm::cli
