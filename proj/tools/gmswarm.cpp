#include <iostream>

#include "CLI11.hpp"

#include "gmswarm/cli.hpp"

int main(int argc, char** argv) {
  using namespace gmswarm::cli;

  CLI::App app{"gm/ID mixed-variable particle swarm sizing"};
  app.require_subcommand(1);

  OptimizeOptions opt;
  std::string opt_out;
  bool no_timing = false;
  auto* optimize = app.add_subcommand("optimize", "run one optimization per seed");
  optimize->add_option("--config", opt.config, "run configuration (JSON)")->required();
  optimize->add_option("--seed", opt.seeds, "seed(s), overriding the config list");
  optimize->add_option("--set", opt.sets, "override a config key, e.g. swarm.iterations=10");
  optimize->add_option("--out", opt_out, "output directory");
  optimize->add_option("--parallel-seeds", opt.parallel_seeds, "seeds to run concurrently")
      ->check(CLI::PositiveNumber);
  optimize->add_flag("--no-timing", no_timing, "write elapsed_s as 0 for byte-stable traces");

  EvaluateOptions ev;
  double tail = 0.0;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a W/L sizing against the goals");
  evaluate->add_option("--config", ev.config, "run configuration (JSON)")->required();
  evaluate->add_option("--sizing", ev.sizing, "sizing CSV (group,W_um,L_um)")->required();
  auto* tail_opt = evaluate->add_option("--tail-current", tail, "tail current I_T in uA");
  evaluate->add_option("--set", ev.sets, "override a config key");

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "summarize traces against a reference area");
  report->add_option("--reference", rep.reference_area_um2, "reference gate area (um^2)")
      ->required();
  report->add_option("traces", rep.traces, "trace CSV files")->required();

  GenLutOptions gen;
  auto* gen_lut = app.add_subcommand("gen-lut", "write a synthetic gm/ID table");
  gen_lut->add_option("--kind", gen.kind, "n_type or p_type");
  gen_lut->add_option("--out", gen.out, "output CSV")->required();
  gen_lut->add_option("--lengths", gen.lengths_um, "channel lengths in um");
  gen_lut->add_option("--gmid-min", gen.gmid_min);
  gen_lut->add_option("--gmid-max", gen.gmid_max);
  gen_lut->add_option("--samples", gen.samples);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidInput;
  }

  if (optimize->parsed()) {
    if (!opt_out.empty()) opt.out = opt_out;
    opt.timing = !no_timing;
    return cmd_optimize(opt, std::cout, std::cerr);
  }
  if (evaluate->parsed()) {
    if (tail_opt->count() > 0) ev.tail_current_ua = tail;
    return cmd_evaluate(ev, std::cout, std::cerr);
  }
  if (report->parsed()) return cmd_report(rep, std::cout, std::cerr);
  return cmd_gen_lut(gen, std::cout, std::cerr);
}
