// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and desk-scale settings are fixed below.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cyclegan/checkpoint.hpp"
#include "cyclegan/commands.hpp"
#include "cyclegan/evaluation.hpp"
#include "cyclegan/networks.hpp"
#include "cyclegan/objectives.hpp"
#include "cyclegan/trainer.hpp"
#include "scratch_dir.hpp"

using namespace cyclegan;
namespace fs = std::filesystem;

namespace {

constexpr double kGradientBudgetSeconds = 60.0;
constexpr double kInitStdTolerance = 0.001;
// Loss examples are checked exactly up to double rounding of the inputs
// (0.3, 0.1 and 0.2 are not representable).
constexpr double kFormulaTolerance = 1e-12;
constexpr double kHistoryFractionTolerance = 0.02;
constexpr int kExchanges = 10000;

constexpr double kTranslationRatioMax = 0.3;
constexpr double kCycleErrorMax = 0.1;
constexpr double kDeskBudgetSeconds = 600.0;
constexpr double kCycleOnlyRatioMin = 0.8;
constexpr double kGanOnlyCycleFactor = 3.0;

// Desk-scale setup: 64 images per domain at 32x32, two residual blocks,
// 64 steps per epoch at the default learning rate. Faster rates let the
// discriminators win during the decay phase and translation drifts.
constexpr int kDeskImages = 64;
constexpr int kDeskResolution = 32;
constexpr int kDeskEpochsConstant = 16;
constexpr int kDeskEpochsDecay = 16;
constexpr int kDeskFilters = 16;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* id, const char* title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s %s %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
}

// Runs one criterion; an escaping exception counts as a failure.
void criterion(const char* id, const char* title, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(id, title, pass, detail);
  } catch (const std::exception& e) {
    report(id, title, false, std::string("exception: ") + e.what());
  }
}

int count_kind(const NetworkSpec& spec, LayerKind kind) {
  return static_cast<int>(std::count_if(spec.layers.begin(), spec.layers.end(),
                                        [&](const LayerSpec& l) { return l.kind == kind; }));
}

Tensor<double> filled(Shape shape, double value) { return Tensor<double>::full(std::move(shape), value); }

bool near(double a, double b) { return std::abs(a - b) <= kFormulaTolerance; }

RunConfig desk_run(Variant variant, OracleKind kind, double lambda_identity) {
  RunConfig cfg;
  auto& t = cfg.training;
  t.resolution = kDeskResolution;
  t.residual_blocks = 2;
  t.generator_filters = kDeskFilters;
  t.discriminator_filters = kDeskFilters;
  t.epochs_constant = kDeskEpochsConstant;
  t.epochs_decay = kDeskEpochsDecay;
  t.seed = 0;
  t.variant = variant;
  t.lambda_identity = lambda_identity;
  cfg.synthetic = kind;
  cfg.synthetic_images = kDeskImages;
  cfg.eval_images = kDeskImages;
  return cfg;
}

struct DeskResult {
  MetricsReport metrics;
  double seconds = 0.0;
  double ratio() const { return *metrics.translation_error_xy / *metrics.identity_baseline; }
};

DeskResult desk_train(const RunConfig& cfg) {
  const auto data = load_run_data(cfg);
  const auto start = Clock::now();
  const auto result = train(cfg.training, data.train_x, data.train_y);
  DeskResult out;
  out.seconds = seconds_since(start);
  out.metrics =
      evaluate(result.model, data.eval_x, data.eval_y, data.oracle, std::string(to_string(cfg.training.variant)));
  return out;
}

RunConfig tiny_run(const fs::path& out) {
  RunConfig cfg;
  cfg.training.resolution = 32;
  cfg.training.residual_blocks = 1;
  cfg.training.generator_filters = 4;
  cfg.training.discriminator_filters = 4;
  cfg.training.epochs_constant = 2;
  cfg.training.epochs_decay = 2;
  cfg.training.buffer_capacity = 4;
  cfg.training.checkpoint_every = 1;
  cfg.training.seed = 11;
  cfg.synthetic = OracleKind::invert;
  cfg.synthetic_images = 6;
  cfg.eval_images = 2;
  cfg.output_dir = out;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);

  criterion("1", "gradient suite", [] {
    const auto start = Clock::now();
    const auto rows = run_gradchecks(gradcheck_registry(), 10);
    const double elapsed = seconds_since(start);
    double worst = 0.0;
    std::string worst_name;
    bool all = true;
    for (const auto& r : rows) {
      all = all && r.passed;
      if (r.max_relative_error >= worst) {
        worst = r.max_relative_error;
        worst_name = r.name;
      }
    }
    const bool pass = all && worst < kGradCheckTolerance && elapsed < kGradientBudgetSeconds;
    return std::pair{pass, fmt::format("{} checks x 10 seeds, worst {:.2e} ({}) < {:.0e}, {:.1f}s < {:.0f}s",
                                       rows.size(), worst, worst_name, kGradCheckTolerance, elapsed,
                                       kGradientBudgetSeconds)};
  });

  criterion("2", "network structure", [] {
    const int field = receptive_field(build_discriminator());
    const int blocks128 = count_kind(build_generator(128), LayerKind::residual_block);
    const int blocks256 = count_kind(build_generator(256), LayerKind::residual_block);

    bool shape_kept = true;
    for (int r : {32, 64, 128}) {
      const auto spec = build_generator(r, {.base_filters = 4});
      const auto params = make_parameters<float>(spec);
      NoGradGuard no_grad;
      const auto y = forward(spec, params, Tensor<float>::full({1, 3, r, r}, 0.25f));
      shape_kept = shape_kept && y.shape() == Shape{1, 3, r, r};
    }

    const auto model = make_model(build_generator(128), build_discriminator(), 7);
    std::size_t n = 0;
    double s1 = 0.0, s2 = 0.0;
    for (const Network* net : {&model.g, &model.f, &model.d_x, &model.d_y}) {
      for (const auto& [name, t] : net->params) {
        if (!name.ends_with(".weight")) continue;
        for (float v : t.values()) {
          s1 += v;
          s2 += double(v) * v;
          ++n;
        }
      }
    }
    const double mean = s1 / double(n);
    const double sd = std::sqrt(s2 / double(n) - mean * mean);

    const bool pass = field == 70 && blocks128 == 6 && blocks256 == 9 && shape_kept && n >= 100000 &&
                      std::abs(sd - kInitStddev) <= kInitStdTolerance;
    return std::pair{pass, fmt::format("receptive field {}, residual blocks {}@128 {}@256, shape kept {}, "
                                       "init std {:.5f} over {} weights",
                                       field, blocks128, blocks256, shape_kept ? "yes" : "no", sd, n)};
  });

  criterion("3", "loss formulas", [] {
    std::vector<std::string> bad;
    int checked = 0;
    auto expect = [&](const char* what, double got, double want) {
      ++checked;
      if (!near(got, want)) bad.push_back(fmt::format("{} = {:.17g}, want {:.17g}", what, got, want));
    };
    const Shape patch{1, 1, 4, 4};
    const Shape image{1, 3, 8, 8};

    expect("generator term, all ones", lsgan_generator_term(filled(patch, 1.0)).item(), 0.0);
    expect("generator term, all zeros", lsgan_generator_term(filled(patch, 0.0)).item(), 1.0);
    expect("generator term, [0.5, 0.25]",
           lsgan_generator_term(Tensor<double>::from_values({1, 1, 1, 2}, {0.5, 0.25})).item(), 0.40625);

    expect("discriminator term, perfect", lsgan_discriminator_term(filled(patch, 1.0), filled(patch, 0.0)).item(),
           0.0);
    expect("discriminator term, inverted", lsgan_discriminator_term(filled(patch, 0.0), filled(patch, 1.0)).item(),
           2.0);
    expect("discriminator term, undecided",
           lsgan_discriminator_term(filled(patch, 0.5), filled(patch, 0.5)).item(), 0.5);

    const auto x = filled(image, -0.4), y = filled(image, 0.35);
    const auto x_off = filled(image, -0.4 + 0.3), y_off = filled(image, 0.35 + 0.1);
    expect("cycle, perfect", cycle_loss(x, x, y, y).item(), 0.0);
    expect("cycle, offsets 0.3 and 0.1", cycle_loss(x, x_off, y, y_off).item(), 0.3 + 0.1);
    expect("cycle, forward only",
           cycle_loss(x, x_off, Tensor<double>(), Tensor<double>(), CycleDirections::forward_only).item(), 0.3);
    expect("cycle, backward only",
           cycle_loss(Tensor<double>(), Tensor<double>(), y, y_off, CycleDirections::backward_only).item(), 0.1);

    expect("identity, exact", identity_loss(y, y, x, x).item(), 0.0);
    expect("identity, G(y) = y + 0.2", identity_loss(filled(image, 0.35 + 0.2), y, x, x).item(), 0.2);
    expect("identity, disabled", identity_loss(filled(image, 0.9), y, x_off, x, false).item(), 0.0);

    GeneratorTerms<double> terms{Tensor<double>::scalar(0.5), Tensor<double>::scalar(0.5),
                                 Tensor<double>::scalar(0.1), Tensor<double>()};
    expect("total, lambda 10", total_generator_objective(terms, 10.0, 0.0).item(), 2.0);
    expect("total, lambda 0", total_generator_objective(terms, 0.0, 0.0).item(), 1.0);
    GeneratorTerms<double> with_idt = terms;
    with_idt.idt = Tensor<double>::scalar(1.0);
    expect("identity weight 0.5 lambda",
           total_generator_objective(with_idt, 10.0, 0.5 * 10.0).item() -
               total_generator_objective(terms, 10.0, 0.0).item(),
           5.0);

    LossBreakdown parts;
    parts.gan_g = 0.5;
    parts.gan_f = 0.5;
    parts.cyc = 0.1;
    parts.lambda = 10.0;
    expect("total on reported values", total_generator_objective(parts), 2.0);

    return std::pair{bad.empty(), bad.empty() ? fmt::format("{} worked examples match", checked) : bad.front()};
  });

  criterion("4", "schedule and replay buffer", [] {
    TrainingConfig cfg;
    const double lr0 = lr_at_epoch(0, cfg), lr99 = lr_at_epoch(99, cfg), lr150 = lr_at_epoch(150, cfg),
                 lr200 = lr_at_epoch(200, cfg);
    const bool schedule = lr0 == 2e-4 && lr99 == 2e-4 && std::abs(lr150 - 1e-4) < 1e-18 && lr200 == 0.0;

    ReplayBuffer buffer(50, 3);
    std::size_t largest = 0;
    int from_history = 0, exchanges = 0;
    for (int i = 0; i < 50 + kExchanges; ++i) {
      const auto fresh = Tensor<float>::scalar(static_cast<float>(i));
      const bool counted = buffer.size() == 50;
      const auto out = buffer.exchange(fresh);
      largest = std::max(largest, buffer.size());
      if (counted) {
        ++exchanges;
        if (out.node() != fresh.node()) ++from_history;
      }
    }
    const double fraction = double(from_history) / exchanges;
    const bool pass = schedule && largest <= 50 && std::abs(fraction - 0.5) <= kHistoryFractionTolerance;
    return std::pair{pass, fmt::format("lr(0)={:g} lr(99)={:g} lr(150)={:g} lr(200)={:g}, buffer max {}, "
                                       "history fraction {:.4f} over {} exchanges",
                                       lr0, lr99, lr150, lr200, largest, fraction, exchanges)};
  });

  // Criteria 5 and 6 share the three desk-scale runs.
  std::optional<DeskResult> full, cycle_only, gan_only;
  std::string desk_error;
  try {
    full = desk_train(desk_run(Variant::full, OracleKind::invert, 0.0));
    cycle_only = desk_train(desk_run(Variant::cycle_only, OracleKind::invert, 0.0));
    gan_only = desk_train(desk_run(Variant::gan_only, OracleKind::invert, 0.0));
  } catch (const std::exception& e) {
    desk_error = e.what();
  }

  criterion("5", "desk-scale translation", [&] {
    if (!full) return std::pair{false, "training failed: " + desk_error};
    const auto& m = full->metrics;
    const int steps = kDeskImages * (kDeskEpochsConstant + kDeskEpochsDecay);
    const bool pass =
        full->ratio() < kTranslationRatioMax && m.cycle_error_x < kCycleErrorMax && full->seconds < kDeskBudgetSeconds;
    return std::pair{pass, fmt::format("translation {:.4f} = {:.3f} x baseline {:.4f} (< {:.1f}), "
                                       "cycle_x {:.4f} (< {:.1f}), {} steps in {:.0f}s (< {:.0f}s)",
                                       *m.translation_error_xy, full->ratio(), *m.identity_baseline,
                                       kTranslationRatioMax, m.cycle_error_x, kCycleErrorMax, steps, full->seconds,
                                       kDeskBudgetSeconds)};
  });

  criterion("6", "loss ablation ordering", [&] {
    if (!full || !cycle_only || !gan_only) return std::pair{false, "training failed: " + desk_error};
    const double t_full = *full->metrics.translation_error_xy;
    const double t_cycle = *cycle_only->metrics.translation_error_xy;
    const double t_gan = *gan_only->metrics.translation_error_xy;
    const bool a = cycle_only->ratio() >= kCycleOnlyRatioMin;
    const bool b = gan_only->metrics.cycle_error_x >= kGanOnlyCycleFactor * full->metrics.cycle_error_x;
    const bool c = t_full < t_cycle && t_full < t_gan;
    auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
    return std::pair{a && b && c,
                     fmt::format("(a) {} cycle_only ratio {:.3f} (>= {:.1f}); "
                                 "(b) {} gan_only cycle_x {:.4f} vs {:.1f} x full {:.4f}; "
                                 "(c) {} translation full {:.4f}, cycle_only {:.4f}, gan_only {:.4f}",
                                 mark(a), cycle_only->ratio(), kCycleOnlyRatioMin, mark(b),
                                 gan_only->metrics.cycle_error_x, kGanOnlyCycleFactor, full->metrics.cycle_error_x,
                                 mark(c), t_full, t_cycle, t_gan)};
  });

  criterion("7", "determinism and persistence", [] {
    testing::ScratchDir dir("cg_accept");
    const auto a = cmd_train(tiny_run(dir / "a"));
    const auto b = cmd_train(tiny_run(dir / "b"));
    const bool csv_same = read_file(a.loss_csv) == read_file(b.loss_csv);

    const auto loaded = load_checkpoint(a.final_checkpoint);
    save_checkpoint(dir / "again.cgck", loaded);
    const bool round_trip = read_file(a.final_checkpoint) == read_file(dir / "again.cgck");

    // Resume from the end of epoch 2 of 4; every later loss row must match.
    const auto whole = lines_of(read_file(b.loss_csv));
    fs::remove(b.final_checkpoint);
    fs::remove(dir / "b" / "epoch_0003.cgck");
    fs::remove(dir / "b" / "epoch_0004.cgck");
    const auto resumed = cmd_train(tiny_run(dir / "b"), dir / "b" / "epoch_0002.cgck");
    const auto again = lines_of(read_file(resumed.loss_csv));
    const std::size_t later = whole.size() > 1 ? (whole.size() - 1) / 2 : 0;
    const bool resume_same =
        again == whole && later > 0 && read_file(resumed.final_checkpoint) == read_file(a.final_checkpoint);

    return std::pair{csv_same && round_trip && resume_same,
                     fmt::format("rerun CSV {}, save/load/save {}, resume reproduces {} later rows and the final "
                                 "checkpoint: {}",
                                 csv_same ? "identical" : "DIFFERS", round_trip ? "identical" : "DIFFERS", later,
                                 resume_same ? "yes" : "NO")};
  });

  criterion("8", "identity loss preserves color", [] {
    const double lambda = TrainingConfig{}.lambda;
    const auto without = desk_train(desk_run(Variant::full, OracleKind::affine_intensity, 0.0));
    const auto with = desk_train(desk_run(Variant::full, OracleKind::affine_intensity, 0.5 * lambda));
    const double t0 = *without.metrics.tint_shift, t1 = *with.metrics.tint_shift;
    return std::pair{t1 < t0, fmt::format("tint shift {:.4f} with identity weight {:.1f} vs {:.4f} without", t1,
                                          0.5 * lambda, t0)};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
