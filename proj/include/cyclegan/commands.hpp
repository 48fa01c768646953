#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cyclegan/evaluation.hpp"
#include "cyclegan/gradcheck.hpp"
#include "cyclegan/run_config.hpp"

namespace cyclegan {

// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad arguments or configuration
inline constexpr int kExitRuntime = 2;  // numeric abort, shape mismatch, failed check
inline constexpr int kExitIo = 3;       // unreadable/unwritable files, corrupt checkpoints

int exit_code_for(const std::exception& e);

struct RunData {
  DomainDataset train_x, train_y, eval_x, eval_y;
  std::optional<SyntheticOracle> oracle;  // set for synthetic runs only
};

// Synthetic pairs (held-out split drawn from a separate seed) or PNG
// directories, at the configured resolution.
RunData load_run_data(const RunConfig& cfg);

// step,epoch,lr,gan_g,gan_f,disc_x,disc_y,cyc,idt,total_gen
std::string loss_csv_header();
std::string loss_csv_row(const StepRecord& record);

struct TrainOutcome {
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path loss_csv;
  std::filesystem::path final_checkpoint;
};

// Trains from scratch, or continues from `resume` whose configuration must
// match. Writes <output_dir>/epoch_NNNN.cgck at the configured cadence,
// <output_dir>/final.cgck and <output_dir>/losses.csv.
TrainOutcome cmd_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume = std::nullopt);

enum class Direction { x2y, y2x };
Direction parse_direction(std::string_view text);
std::string_view to_string(Direction d);

// Applies G (x2y) or F (y2x) to every decodable PNG of `input_dir` and
// writes <stem>_<direction>.png files. Returns the written paths.
std::vector<std::filesystem::path> cmd_translate(const std::filesystem::path& checkpoint,
                                                 const std::filesystem::path& input_dir, Direction direction,
                                                 const std::filesystem::path& output_dir);

// Evaluates a trained checkpoint on the held-out split. Writes metrics.txt,
// metrics.csv and triptychs/ under output_dir.
MetricsReport cmd_eval(const RunConfig& cfg);

// Trains and evaluates the five loss variants from the same seed. Writes
// ablation.csv, ablation_<variant>.txt and triptychs/<variant>_*.png.
AblationTable cmd_ablate(const RunConfig& cfg);

struct GradCheckEntry {
  std::string name;
  // One finite-difference comparison for the given seed.
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

struct GradCheckRow {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Every differentiable op plus a small generator -> discriminator
// composition, each in 64-bit precision.
const std::vector<GradCheckEntry>& gradcheck_registry();

inline constexpr double kGradCheckTolerance = 1e-4;

std::vector<GradCheckRow> run_gradchecks(const std::vector<GradCheckEntry>& entries, int seeds = 10,
                                         double tolerance = kGradCheckTolerance);
std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows);

// Prints the table for the registry; returns true when every op passed.
bool cmd_gradcheck(std::ostream& out, int seeds = 10);

}  // namespace cyclegan
