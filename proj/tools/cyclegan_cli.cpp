// Command-line front end: train, translate, eval, ablate, gradcheck.
//
// Log verbosity comes from SPDLOG_LEVEL (trace, debug, info, warn, error,
// off); the default is info.

#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "CLI11.hpp"
#include "cyclegan/commands.hpp"
#include "cyclegan/errors.hpp"

namespace {

std::string config_help() {
  std::string text = "\nConfiguration file keys (key = value, '#' comments):\n";
  for (const auto& k : cyclegan::config_keys()) {
    text += "  " + k.name + " = " + (k.default_value.empty() ? "(unset)" : k.default_value) + "\n      " + k.help +
            "\n";
  }
  text += "\nExit codes: 0 ok, 1 usage/config error, 2 runtime or numeric abort, 3 I/O or corrupt file.\n";
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::info);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Unpaired image-to-image translation with cycle-consistent adversarial networks"};
  app.require_subcommand(1);
  app.footer(config_help());

  std::string config_path, checkpoint, input_dir, output_dir, direction, resume;
  int seeds = 10;

  auto* train = app.add_subcommand("train", "train G, F, D_X and D_Y; writes checkpoints and losses.csv");
  train->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "continue from this checkpoint")->check(CLI::ExistingFile);

  auto* translate = app.add_subcommand("translate", "apply G (x2y) or F (y2x) to a directory of PNGs");
  translate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  translate->add_option("--input-dir", input_dir, "directory of PNG images")->required();
  translate->add_option("--direction", direction, "x2y or y2x")->required()->check(CLI::IsMember({"x2y", "y2x"}));
  translate->add_option("--output-dir", output_dir, "where translated images go")->required();

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the held-out split; writes metrics and triptychs");
  eval->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);

  auto* ablate = app.add_subcommand("ablate", "train and score all five loss variants from one seed");
  ablate->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every differentiable op");
  gradcheck->add_option("--seeds", seeds, "random inputs per op")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cyclegan::kExitOk : cyclegan::kExitUsage;
  }

  try {
    using namespace cyclegan;
    if (*train) {
      const auto cfg = load_run_config(config_path);
      const auto out = cmd_train(cfg, resume.empty() ? std::nullopt : std::optional<std::filesystem::path>(resume));
      std::cout << "wrote " << out.final_checkpoint.string() << " and " << out.loss_csv.string() << "\n";
    } else if (*translate) {
      const auto written = cmd_translate(checkpoint, input_dir, parse_direction(direction), output_dir);
      std::cout << "translated " << written.size() << " images into " << output_dir << "\n";
    } else if (*eval) {
      std::cout << cmd_eval(load_run_config(config_path)).to_text();
    } else if (*ablate) {
      std::cout << cmd_ablate(load_run_config(config_path)).to_csv();
    } else if (*gradcheck) {
      return cmd_gradcheck(std::cout, seeds) ? kExitOk : kExitRuntime;
    }
  } catch (const std::exception& e) {
    // Printed regardless of the log level.
    std::cerr << "error: " << e.what() << "\n";
    return cyclegan::exit_code_for(e);
  }
  return cyclegan::kExitOk;
}
