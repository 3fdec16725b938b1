// SPDX-License-Identifier: Apache-2.0
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "structex/error.hpp"
#include "structex/explanation.hpp"
#include "structex/reflect.hpp"

namespace {

using structex::cli::GlobalOptions;

void add_global_options(CLI::App& sub, GlobalOptions& g) {
  sub.add_option("-c,--config", g.config_file, "Configuration file")->check(CLI::ExistingFile);
  sub.add_option("--seed", g.seed, "Random seed (overrides the config)");
  sub.add_option("--backend", g.backend, "scripted:<path> or remote");
  sub.add_option("-o,--output", g.output_dir, "Output directory");
  sub.add_option("--set", g.overrides, "Extra key=value overrides")->take_all();
}

int report_error(const std::exception& e) {
  std::cerr << "structex: " << e.what() << '\n';
  if (const auto* pe = dynamic_cast<const structex::explanation::ParseError*>(&e)) {
    std::cerr << structex::explanation::format_diagnostics(pe->diagnostics());
  }
  if (const auto* te = dynamic_cast<const structex::reflect::TraceError*>(&e)) {
    std::cerr << "  trace stopped after " << te->partial_trace().attempts.size() << " attempt(s)\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured explanations for earnings-call investment decisions"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::function<int()> action;

  auto pipeline_command = [&](const char* name, const char* help, auto fn, bool with_input = false) {
    auto* sub = app.add_subcommand(name, help);
    add_global_options(*sub, g);
    if (with_input) sub->add_option("-i,--input", g.input, "Transcript file (defaults to the configured corpus)");
    sub->callback([&, fn] {
      action = [&, fn] {
        const auto cfg = structex::cli::load_run_config(g);
        return fn(cfg);
      };
    });
  };

  pipeline_command("split", "Sector-balanced train split and date-held-out test split",
                   [&](const auto& cfg) { return structex::cli::cmd_split(cfg, g); }, true);
  pipeline_command("distill", "Distill transcripts into fact tables",
                   [&](const auto& cfg) { return structex::cli::cmd_distill(cfg, g); }, true);
  pipeline_command("decide", "One decision per fact table", structex::cli::cmd_decide);
  pipeline_command("reflect", "Decision plus self-reflection traces", structex::cli::cmd_reflect);
  pipeline_command("build-datasets", "Demonstrations and comparisons from traces", structex::cli::cmd_build_datasets);
  pipeline_command("train-rm", "Fit the reward model on comparisons", structex::cli::cmd_train_rm);
  pipeline_command("train-policy", "Supervised fit, then reward-driven policy optimization",
                   structex::cli::cmd_train_policy);
  pipeline_command("evaluate", "Macro metrics, confusion matrices and baselines", structex::cli::cmd_evaluate);
  pipeline_command("paths", "Most common decision paths", structex::cli::cmd_paths);
  pipeline_command("stats", "Selected-fact statistics", structex::cli::cmd_stats);
  pipeline_command("sweep", "Solve rate per fact range and round", structex::cli::cmd_sweep);
  pipeline_command("pipeline", "Every stage from distill to sweep",
                   [&](const auto& cfg) { return structex::cli::cmd_pipeline(cfg, g); }, true);

  structex::cli::DemoCommand demo;
  auto* make_demo = app.add_subcommand("make-demo", "Write a synthetic corpus, prices, script and config");
  make_demo->add_option("-o,--output", demo.output_dir, "Directory to create")->required();
  make_demo->add_option("--seed", demo.seed, "Generator seed");
  make_demo->add_option("--instances", demo.instances, "Number of transcripts")->check(CLI::PositiveNumber);
  make_demo->callback([&] { action = [&] { return structex::cli::cmd_make_demo(demo); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return action();
  } catch (const std::exception& e) {
    return report_error(e);
  }
}
