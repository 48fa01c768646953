#include "cyclegan/evaluation.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>

#include "cyclegan/errors.hpp"
#include "cyclegan/ops.hpp"

namespace cyclegan {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double l1(const Tensor<float>& a, const Tensor<float>& b) { return l1_mean(a, b).item(); }

// Mean over channels of |mean_c(a) - mean_c(b)| for 1 x C x H x W tensors.
double channel_mean_gap(const Tensor<float>& a, const Tensor<float>& b) {
  const int c = a.dim(1);
  const std::size_t plane = a.numel() / static_cast<std::size_t>(c);
  auto va = a.values(), vb = b.values();
  double gap = 0;
  for (int ch = 0; ch < c; ++ch) {
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      sa += va[ch * plane + i];
      sb += vb[ch * plane + i];
    }
    gap += std::abs(sa - sb) / static_cast<double>(plane);
  }
  return gap / c;
}

}  // namespace

std::string MetricsReport::to_text() const {
  std::string out;
  auto line = [&](const char* key, const std::string& value) { out += std::string(key) + "=" + value + "\n"; };
  line("variant", variant);
  line("n_eval", std::to_string(n_eval));
  if (translation_error_xy) line("translation_error_xy", number(*translation_error_xy));
  if (translation_error_yx) line("translation_error_yx", number(*translation_error_yx));
  line("cycle_error_x", number(cycle_error_x));
  line("cycle_error_y", number(cycle_error_y));
  if (identity_baseline) line("identity_baseline", number(*identity_baseline));
  if (tint_shift) line("tint_shift", number(*tint_shift));
  return out;
}

std::string MetricsReport::csv_header(bool with_oracle) {
  return with_oracle ? "variant,n_eval,translation_error_xy,translation_error_yx,cycle_error_x,cycle_error_y,"
                       "identity_baseline,tint_shift"
                     : "variant,n_eval,cycle_error_x,cycle_error_y";
}

std::string MetricsReport::csv_row(bool with_oracle) const {
  auto opt = [](const std::optional<double>& v) { return v ? number(*v) : std::string(); };
  std::string row = variant + "," + std::to_string(n_eval) + ",";
  if (with_oracle) row += opt(translation_error_xy) + "," + opt(translation_error_yx) + ",";
  row += number(cycle_error_x) + "," + number(cycle_error_y);
  if (with_oracle) row += "," + opt(identity_baseline) + "," + opt(tint_shift);
  return row;
}

MetricsReport evaluate(const ModelState& model, const DomainDataset& eval_x, const DomainDataset& eval_y,
                       const std::optional<SyntheticOracle>& oracle, const std::string& variant) {
  return evaluate_maps([&](const Tensor<float>& x) { return model.g(x); },
                       [&](const Tensor<float>& y) { return model.f(y); }, eval_x, eval_y, oracle, variant);
}

MetricsReport evaluate_maps(const ImageMap& g, const ImageMap& f, const DomainDataset& eval_x,
                            const DomainDataset& eval_y, const std::optional<SyntheticOracle>& oracle,
                            const std::string& variant) {
  if (eval_x.empty() || eval_y.empty()) throw ConfigError("evaluation sets must be non-empty");
  NoGradGuard no_grad;
  MetricsReport r;
  r.variant = variant;
  r.n_eval = static_cast<int>(std::min(eval_x.size(), eval_y.size()));

  double txy = 0, tyx = 0, cx = 0, cy = 0, base = 0, tint = 0;
  for (const auto& x : eval_x.samples) {
    const auto gx = g(x);
    cx += l1(f(gx), x);
    if (oracle) {
      const auto target = oracle->forward(x);
      txy += l1(gx, target);
      base += l1(x, target);
      tint += channel_mean_gap(gx, target);
    }
  }
  for (const auto& y : eval_y.samples) {
    const auto fy = f(y);
    cy += l1(g(fy), y);
    if (oracle) tyx += l1(fy, oracle->inverse(y));
  }
  const double nx = static_cast<double>(eval_x.size()), ny = static_cast<double>(eval_y.size());
  r.cycle_error_x = cx / nx;
  r.cycle_error_y = cy / ny;
  if (oracle) {
    r.translation_error_xy = txy / nx;
    r.translation_error_yx = tyx / ny;
    r.identity_baseline = base / nx;
    r.tint_shift = tint / nx;
  }
  return r;
}

const AblationRow& AblationTable::row(Variant v) const {
  for (const auto& r : rows)
    if (r.variant == v) return r;
  throw Error("ablation table has no row for " + std::string(to_string(v)));
}

std::string AblationTable::to_csv() const {
  bool with_oracle = false;
  for (const auto& r : rows)
    if (r.metrics && r.metrics->translation_error_xy) with_oracle = true;
  std::string out = "label," + MetricsReport::csv_header(with_oracle) + ",status\n";
  const int empty_fields = with_oracle ? 6 : 2;
  for (const auto& r : rows) {
    out += "\"" + std::string(variant_label(r.variant)) + "\",";
    if (r.metrics) {
      out += r.metrics->csv_row(with_oracle) + ",ok\n";
    } else {
      out += std::string(to_string(r.variant)) + ",0";
      for (int i = 0; i < empty_fields; ++i) out += ",";
      out += ",failed\n";
    }
  }
  return out;
}

AblationTable run_ablation(const TrainingConfig& base_cfg, const EvalSplit& data,
                           const std::optional<SyntheticOracle>& oracle, const TrainedModelHook& on_trained) {
  AblationTable table;
  for (auto v : kAllVariants) {
    TrainingConfig cfg = base_cfg;
    cfg.variant = v;
    AblationRow row;
    row.variant = v;
    try {
      Trainer trainer(cfg);
      trainer.train(data.train_x, data.train_y);
      row.metrics = evaluate(trainer.model(), data.eval_x, data.eval_y, oracle, std::string(to_string(v)));
      if (on_trained) on_trained(v, trainer.model());
    } catch (const NumericError& e) {
      spdlog::error("variant {} aborted: {}", to_string(v), e.what());
      row.failure = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RgbImage triptych_grid(const ModelState& model, const std::vector<Tensor<float>>& samples) {
  if (samples.empty()) throw ConfigError("triptych export needs at least one sample");
  NoGradGuard no_grad;
  const int h = samples.front().dim(2), w = samples.front().dim(3);
  RgbImage grid{3 * w, h * static_cast<int>(samples.size()), {}};
  grid.pixels.resize(static_cast<std::size_t>(grid.width) * grid.height * 3);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& x = samples[s];
    if (x.dim(2) != h || x.dim(3) != w) throw ShapeError("triptych samples must share one size");
    const auto gx = model.g(x);
    const Tensor<float> panels[3] = {x, gx, model.f(gx)};
    for (int p = 0; p < 3; ++p) {
      const auto img = tensor_to_image(panels[p]);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          for (int ch = 0; ch < 3; ++ch) grid.at(static_cast<int>(s) * h + r, p * w + c, ch) = img.at(r, c, ch);
    }
  }
  return grid;
}

std::vector<std::filesystem::path> export_triptychs(const ModelState& model, const DomainDataset& samples,
                                                    const std::filesystem::path& directory,
                                                    const std::string& prefix) {
  if (samples.empty()) throw ConfigError("triptych export needs at least one sample");
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03zu.png", prefix.c_str(), i);
    written.push_back(directory / name);
    write_png(written.back(), triptych_grid(model, {samples.samples[i]}));
  }
  written.push_back(directory / (prefix + "_grid.png"));
  write_png(written.back(), triptych_grid(model, samples.samples));
  return written;
}

}  // namespace cyclegan
