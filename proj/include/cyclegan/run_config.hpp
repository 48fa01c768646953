#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclegan/datasets.hpp"
#include "cyclegan/trainer.hpp"

namespace cyclegan {

// Contents of a run configuration file: the training hyper-parameters plus
// where the data comes from and where outputs go.
//
// Data is either synthetic (`synthetic = invert` etc., with a known oracle)
// or read from PNG directories (`train_x`, `train_y`, optional `eval_x`,
// `eval_y`). Directory runs have no oracle, so evaluation reports cycle
// errors only.
struct RunConfig {
  TrainingConfig training;
  std::optional<OracleKind> synthetic;
  int synthetic_images = 64;  // per domain, training split
  int eval_images = 64;       // per domain, synthetic held-out split
  std::filesystem::path train_x, train_y, eval_x, eval_y;
  std::filesystem::path output_dir = "run";
  std::filesystem::path checkpoint;  // eval: model to load (default: output_dir/final.cgck)
  int triptychs = 4;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every accepted key with its default, in file order.
const std::vector<ConfigKey>& config_keys();

// Parses `key = value` lines. '#' starts a comment; blank lines are
// ignored. Unknown or repeated keys, malformed values and out-of-range
// values raise ConfigError carrying the 1-based line number.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

// Text that parse_run_config turns back into `cfg`.
std::string format_run_config(const RunConfig& cfg);
std::string format_training_config(const TrainingConfig& cfg);
TrainingConfig parse_training_config(std::string_view text);

}  // namespace cyclegan
