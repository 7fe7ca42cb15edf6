// Command-line driver for the benchmark pipeline.
#include <CLI11.hpp>
#include <iostream>

#include "compbench/error.hpp"
#include "compbench/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Compositionality benchmark for audio encoders"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool desk_scale = false;
  compbench::StageOptions opts;

  auto stages = compbench::kStages;
  stages.push_back("run-all");
  for (const auto& name : stages) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Override the output root");
    sub->add_flag("--desk-scale", desk_scale, "Use the small desk-scale pool and subset sizes");
    sub->add_option("--encoder", opts.encoders, "Restrict to the named encoder (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    auto cfg = compbench::load_config(config_path);
    if (!out_dir.empty()) cfg.output_root = out_dir;
    if (desk_scale) compbench::apply_desk_scale(cfg);
    compbench::run_stage(stage, cfg, opts);
  } catch (const std::exception& e) {
    std::cerr << "compbench " << stage << ": " << e.what() << '\n';
    return compbench::exit_code_for(e);
  }
  return 0;
}
