#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cyclegan/datasets.hpp"
#include "cyclegan/image_io.hpp"
#include "cyclegan/networks.hpp"
#include "cyclegan/trainer.hpp"

namespace cyclegan {

// Oracle-based error measures on a held-out set. All errors are means of
// per-image l1_mean values. Translation errors and the baseline need an
// oracle and are absent without one.
struct MetricsReport {
  std::optional<double> translation_error_xy;  // G(x) vs T(x)
  std::optional<double> translation_error_yx;  // F(y) vs T^-1(y)
  double cycle_error_x = 0.0;                  // F(G(x)) vs x
  double cycle_error_y = 0.0;                  // G(F(y)) vs y
  std::optional<double> identity_baseline;     // x vs T(x): error of doing nothing
  std::optional<double> tint_shift;            // per-channel |mean G(x) - mean T(x)|, averaged
  int n_eval = 0;
  std::string variant;

  // key=value lines in a fixed order; absent fields are left out.
  std::string to_text() const;
  static std::string csv_header(bool with_oracle);
  std::string csv_row(bool with_oracle) const;
};

using ImageMap = std::function<Tensor<float>(const Tensor<float>&)>;

// Scores an arbitrary pair of mappings g: X -> Y, f: Y -> X.
MetricsReport evaluate_maps(const ImageMap& g, const ImageMap& f, const DomainDataset& eval_x,
                            const DomainDataset& eval_y, const std::optional<SyntheticOracle>& oracle,
                            const std::string& variant = "");

// Inference only: no graph is built and the model is not modified.
MetricsReport evaluate(const ModelState& model, const DomainDataset& eval_x, const DomainDataset& eval_y,
                       const std::optional<SyntheticOracle>& oracle, const std::string& variant = "");

struct AblationRow {
  Variant variant = Variant::full;
  std::optional<MetricsReport> metrics;  // empty when the run aborted
  std::string failure;
};

struct AblationTable {
  std::vector<AblationRow> rows;  // cycle_only, gan_only, gan_forward, gan_backward, full

  const AblationRow& row(Variant v) const;
  std::string to_csv() const;
};

struct EvalSplit {
  DomainDataset train_x, train_y, eval_x, eval_y;
};

// Trains every variant from the same initial weights and data order (only
// `variant` differs from base_cfg) and scores each on the shared held-out
// split. A run that aborts on a numeric error becomes a failed row.
// `on_trained` sees each successfully trained model before it is dropped.
using TrainedModelHook = std::function<void(Variant, const ModelState&)>;
AblationTable run_ablation(const TrainingConfig& base_cfg, const EvalSplit& data,
                           const std::optional<SyntheticOracle>& oracle, const TrainedModelHook& on_trained = {});

// Writes one PNG per sample holding [x | G(x) | F(G(x))] side by side, and
// returns the written paths.
std::vector<std::filesystem::path> export_triptychs(const ModelState& model, const DomainDataset& samples,
                                                    const std::filesystem::path& directory,
                                                    const std::string& prefix = "triptych");

// Same three panels per sample stacked as rows of one image.
RgbImage triptych_grid(const ModelState& model, const std::vector<Tensor<float>>& samples);

}  // namespace cyclegan
