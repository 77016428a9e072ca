#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

using jacobound::cli::RunConfig;

namespace {

void add_options(CLI::App& sub, RunConfig& cfg, std::string& grid) {
  sub.add_option("--model", cfg.model, "Model JSON file")->required();
  sub.add_option("--p", cfg.p, "Norm: 1, 2 or inf");
  sub.add_option("--center", cfg.center, "JSON array with the ball center");
  sub.add_option("--inputs", cfg.inputs, "JSON array of {x, label} examples");
  sub.add_option("--index", cfg.indices, "Restrict --inputs to these entries")->delimiter(',');
  sub.add_option("--radius", cfg.radius, "Ball radius (search limit for certify/landscape)");
  sub.add_option("--radius-grid", grid, "START,STOP,COUNT[,log]");
  sub.add_option("--method", cfg.methods,
                 "recurjac-b, recurjac-f0, recurjac-f1, fastlip, naive, sampled or all")
      ->delimiter(',');
  sub.add_option("--intervals", cfg.intervals, "Integration intervals for certify");
  sub.add_option("--seed", cfg.seed, "Seed for sampling and random targets");
  sub.add_option("--threads", cfg.threads, "Worker threads (0 = hardware)");
  sub.add_option("--format", cfg.format, "json or csv");
  sub.add_option("--out", cfg.out, "Write the report here instead of stdout");
  sub.add_option("--samples", cfg.samples, "Sample count for the sampled lower bound");
  sub.add_option("--target-mode", cfg.target_modes, "untargeted, runner-up, random, least-likely")
      ->delimiter(',');
  sub.add_option("--output-index", cfg.output_indices, "Outputs analysed by landscape")->delimiter(',');
  sub.add_flag("--all-levels", cfg.all_levels, "Dump every level of the Jacobian bounds");
  sub.add_flag("--strict", cfg.strict, "Exit with status 4 when an input is misclassified");
  sub.add_option("--cap", cfg.cap, "Maximum uncertain neurons for enumeration");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified Jacobian bounds, Lipschitz constants and robustness radii"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string grid;
  for (const char* name : {"lipschitz", "certify", "landscape", "jacobian", "oracle"}) {
    auto* sub = app.add_subcommand(name);
    add_options(*sub, cfg, grid);
    sub->callback([&cfg, name] { cfg.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return jacobound::cli::config_error;
  }

  jacobound::cli::Report report;
  try {
    if (!grid.empty()) cfg.grid = jacobound::cli::parse_grid(grid);
    cfg.threads = jacobound::resolve_threads(cfg.threads);
    report = jacobound::cli::run(cfg);
  } catch (const jacobound::cli::ConfigError& e) {
    report = {jacobound::cli::config_error, std::string("error: ") + e.what() + "\n"};
  }

  if (report.exit_code != jacobound::cli::ok && report.exit_code != jacobound::cli::refused) {
    std::cerr << report.text;
    return report.exit_code;
  }
  if (cfg.out.empty()) {
    std::cout << report.text;
  } else {
    std::ofstream out(cfg.out);
    if (!out) {
      std::cerr << "error: cannot write '" << cfg.out << "'\n";
      return jacobound::cli::config_error;
    }
    out << report.text;
  }
  return report.exit_code;
}
