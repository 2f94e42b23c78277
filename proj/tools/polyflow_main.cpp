#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polyflow/pipeline.hpp"

namespace {

const std::vector<std::string> kStages = {"generate-data", "train",    "extract-regions",
                                          "simplify",      "solve",    "evaluate",
                                          "report",        "run"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-learning pipeline for radial network scheduling"};
  app.require_subcommand(1);

  std::string config_path;
  std::string mode;
  std::string out_dir;
  int64_t seed = -1;
  int steps = -2;

  for (const auto& stage : kStages) {
    auto* sub = app.add_subcommand(stage);
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--mode", mode, "p2 or p3 (solve/evaluate/report)")
        ->check(CLI::IsMember({"p2", "p3"}));
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the artifact directory");
    sub->add_option("--steps", steps, "override the solve horizon");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    polyflow::pipeline::Config cfg = polyflow::pipeline::load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (steps >= -1) cfg.solve_steps = steps;

    if (stage == "run") {
      for (const std::string s :
           {"generate-data", "train", "extract-regions", "simplify", "solve", "evaluate",
            "report"})
        polyflow::pipeline::run_stage(cfg, s, mode);
    } else {
      polyflow::pipeline::run_stage(cfg, stage, mode);
    }
  } catch (const std::exception& e) {
    std::cerr << "polyflow " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
