#include "cyclegan/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "cyclegan/checkpoint.hpp"
#include "cyclegan/errors.hpp"
#include "cyclegan/image_io.hpp"
#include "cyclegan/ops.hpp"

namespace cyclegan {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e)) return kExitUsage;
  if (dynamic_cast<const CorruptionError*>(&e) || dynamic_cast<const IoError*>(&e)) return kExitIo;
  return kExitRuntime;
}

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Keeps the header and the rows of steps before `step`.
std::string loss_rows_before(const fs::path& csv, std::uint64_t step) {
  std::string kept = loss_csv_header() + "\n";
  if (!fs::exists(csv)) return kept;
  std::istringstream in(read_file(csv));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoull(line.substr(0, comma)) < step) kept += line + "\n";
  }
  return kept;
}

fs::path default_checkpoint(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? cfg.output_dir / "final.cgck" : cfg.checkpoint;
}

void require_resolution(const TrainingConfig& trained, const RunConfig& cfg) {
  if (trained.resolution != cfg.training.resolution) {
    throw ConfigError("checkpoint was trained at " + std::to_string(trained.resolution) + "x" +
                      std::to_string(trained.resolution) + " but the config asks for " +
                      std::to_string(cfg.training.resolution) + "x" + std::to_string(cfg.training.resolution));
  }
}

// Triptychs for both directions: x rows show [x | G(x) | F(G(x))], y rows
// [y | F(y) | G(F(y))].
void export_both_directions(const ModelState& model, const RunData& data, int count, const fs::path& dir,
                            const std::string& prefix) {
  if (count <= 0) return;
  auto head = [count](const DomainDataset& d) {
    DomainDataset out = d;
    const auto n = std::min<std::size_t>(d.size(), static_cast<std::size_t>(count));
    out.samples.resize(n);
    out.names.resize(std::min(out.names.size(), n));
    return out;
  };
  ModelState swapped = model;
  std::swap(swapped.g, swapped.f);
  export_triptychs(model, head(data.eval_x), dir, prefix + "x");
  export_triptychs(swapped, head(data.eval_y), dir, prefix + "y");
}

}  // namespace

RunData load_run_data(const RunConfig& cfg) {
  const bool has_dirs = !cfg.train_x.empty() || !cfg.train_y.empty();
  if (cfg.synthetic && has_dirs) throw ConfigError("set either synthetic or train_x/train_y, not both");
  RunData data;
  const int res = cfg.training.resolution;
  if (cfg.synthetic) {
    auto train = make_synthetic_pair(*cfg.synthetic, cfg.synthetic_images, res, cfg.training.seed);
    auto held = make_synthetic_pair(*cfg.synthetic, cfg.eval_images, res, cfg.training.seed + 0x9e3779b9ull);
    data.train_x = std::move(train.x);
    data.train_y = std::move(train.y);
    data.eval_x = std::move(held.x);
    data.eval_y = std::move(held.y);
    data.oracle = held.oracle;
    return data;
  }
  if (cfg.train_x.empty() || cfg.train_y.empty()) {
    throw ConfigError("no training data: set synthetic, or both train_x and train_y");
  }
  data.train_x = load_domain(cfg.train_x, res, cfg.training.seed);
  data.train_y = load_domain(cfg.train_y, res, cfg.training.seed + 1);
  data.eval_x = cfg.eval_x.empty() ? data.train_x : load_domain(cfg.eval_x, res, cfg.training.seed + 2);
  data.eval_y = cfg.eval_y.empty() ? data.train_y : load_domain(cfg.eval_y, res, cfg.training.seed + 3);
  return data;
}

std::string loss_csv_header() { return "step,epoch,lr,gan_g,gan_f,disc_x,disc_y,cyc,idt,total_gen"; }

std::string loss_csv_row(const StepRecord& r) {
  const auto& l = r.losses;
  return std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + number(r.lr) + "," + number(l.gan_g) + "," +
         number(l.gan_f) + "," + number(l.disc_x) + "," + number(l.disc_y) + "," + number(l.cyc) + "," +
         number(l.idt) + "," + number(l.total_gen);
}

TrainOutcome cmd_train(const RunConfig& cfg, const std::optional<fs::path>& resume) {
  const auto data = load_run_data(cfg);
  ensure_directory(cfg.output_dir);

  TrainOutcome outcome;
  outcome.loss_csv = cfg.output_dir / "losses.csv";
  std::string csv = loss_csv_header() + "\n";
  std::optional<Trainer> trainer;
  if (resume) {
    auto state = load_checkpoint(*resume);
    if (!(state.config == cfg.training)) {
      throw ConfigError("checkpoint " + resume->string() + " was trained with a different configuration");
    }
    csv = loss_rows_before(outcome.loss_csv, state.step);
    spdlog::info("resuming from {} at epoch {}", resume->string(), state.epoch);
    trainer.emplace(std::move(state));
  } else {
    trainer.emplace(cfg.training);
  }

  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { csv += loss_csv_row(r) + "\n"; };
  hooks.on_checkpoint = [&](const Trainer& t) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.cgck", t.state().epoch);
    const auto path = cfg.output_dir / name;
    save_checkpoint(path, t.state());
    write_file_atomic(outcome.loss_csv, csv);
    outcome.checkpoints.push_back(path);
    spdlog::info("checkpoint {}", path.string());
  };
  trainer->train(data.train_x, data.train_y, hooks);

  outcome.final_checkpoint = cfg.output_dir / "final.cgck";
  save_checkpoint(outcome.final_checkpoint, trainer->state());
  write_file_atomic(outcome.loss_csv, csv);
  return outcome;
}

Direction parse_direction(std::string_view text) {
  if (text == "x2y") return Direction::x2y;
  if (text == "y2x") return Direction::y2x;
  throw ConfigError("direction must be x2y or y2x, got '" + std::string(text) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::x2y ? "x2y" : "y2x"; }

std::vector<fs::path> cmd_translate(const fs::path& checkpoint, const fs::path& input_dir, Direction direction,
                                    const fs::path& output_dir) {
  const auto state = load_checkpoint(checkpoint);
  const Network& net = direction == Direction::x2y ? state.model.g : state.model.f;
  const int res = state.config.resolution;

  std::error_code ec;
  if (!fs::is_directory(input_dir, ec)) throw IoError("not a directory: " + input_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<std::pair<fs::path, Tensor<float>>> inputs;
  for (const auto& file : files) {
    RgbImage image;
    try {
      image = read_png(file);
    } catch (const IoError& e) {
      spdlog::warn("skipping {}: {}", file.string(), e.what());
      continue;
    }
    if (image.width != res || image.height != res) {
      throw ShapeError(file.filename().string() + " is 3x" + std::to_string(image.height) + "x" +
                       std::to_string(image.width) + " but the model expects 3x" + std::to_string(res) + "x" +
                       std::to_string(res));
    }
    inputs.emplace_back(file, image_to_tensor(image));
  }
  if (inputs.empty()) throw IoError("no inputs: " + input_dir.string() + " holds no decodable PNG images");

  ensure_directory(output_dir);
  NoGradGuard no_grad;
  std::vector<fs::path> written;
  for (const auto& [file, x] : inputs) {
    auto out = output_dir / (file.stem().string() + "_" + std::string(to_string(direction)) + ".png");
    write_png(out, tensor_to_image(net(x)));
    written.push_back(std::move(out));
  }
  return written;
}

MetricsReport cmd_eval(const RunConfig& cfg) {
  const auto state = load_checkpoint(default_checkpoint(cfg));
  require_resolution(state.config, cfg);
  const auto data = load_run_data(cfg);
  const auto report =
      evaluate(state.model, data.eval_x, data.eval_y, data.oracle, std::string(to_string(state.config.variant)));
  ensure_directory(cfg.output_dir);
  write_file_atomic(cfg.output_dir / "metrics.txt", report.to_text());
  const bool with_oracle = data.oracle.has_value();
  write_file_atomic(cfg.output_dir / "metrics.csv",
                    MetricsReport::csv_header(with_oracle) + "\n" + report.csv_row(with_oracle) + "\n");
  export_both_directions(state.model, data, cfg.triptychs, cfg.output_dir / "triptychs", "");
  return report;
}

AblationTable cmd_ablate(const RunConfig& cfg) {
  const auto data = load_run_data(cfg);
  ensure_directory(cfg.output_dir);
  const EvalSplit split{data.train_x, data.train_y, data.eval_x, data.eval_y};
  auto table = run_ablation(cfg.training, split, data.oracle, [&](Variant v, const ModelState& model) {
    export_both_directions(model, data, cfg.triptychs, cfg.output_dir / "triptychs", std::string(to_string(v)) + "_");
  });
  write_file_atomic(cfg.output_dir / "ablation.csv", table.to_csv());
  for (const auto& row : table.rows) {
    const auto path = cfg.output_dir / ("ablation_" + std::string(to_string(row.variant)) + ".txt");
    write_file_atomic(path, row.metrics ? row.metrics->to_text() : "variant=" + std::string(to_string(row.variant)) +
                                                                        "\nstatus=failed\nreason=" + row.failure + "\n");
  }
  return table;
}

namespace {

Tensor<double> random_input(const Shape& shape, std::uint64_t seed, bool away_from_zero) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    x = dist(rng);
    // Keeps finite differences off the ReLU kink.
    if (away_from_zero && std::abs(x) < 1e-3) x += x < 0 ? -1e-3 : 1e-3;
  }
  return Tensor<double>::from_values(shape, std::move(v));
}

GradCheckEntry op_entry(std::string name, std::vector<Shape> shapes, ScalarClosure closure, bool kinked = false) {
  return {name, [shapes = std::move(shapes), closure = std::move(closure), kinked](std::uint64_t seed) {
            std::vector<Tensor<double>> inputs;
            for (std::size_t i = 0; i < shapes.size(); ++i)
              inputs.push_back(random_input(shapes[i], seed * 31 + i, kinked));
            return gradient_check(closure, inputs);
          }};
}

GradCheckResult composition_check(std::uint64_t seed) {
  const auto gen = build_generator(24, {.base_filters = 2, .residual_blocks = 1});
  const auto disc = build_discriminator(2);
  const ModelState model = make_model(gen, disc, seed);
  const auto g = model.g.params.cast<double>();
  const auto d = model.d_y.params.cast<double>();
  std::vector<Tensor<double>> inputs{random_input({1, 3, 24, 24}, seed, false)};
  for (const auto* set : {&g, &d})
    for (const auto& [name, t] : *set) inputs.push_back(t);
  auto closure = [&](const std::vector<Tensor<double>>& in) {
    return mean(square(add_scalar(forward(disc, d, forward(gen, g, in[0])), -1.0)));
  };
  // Small step and an absolute floor: the composite is sharply curved at the
  // 0.02 init scale.
  return gradient_check(closure, inputs, GradCheckOptions{.eps = 1e-7, .floor = 1e-3, .max_elements_per_input = 48});
}

}  // namespace

const std::vector<GradCheckEntry>& gradcheck_registry() {
  using V = std::vector<Tensor<double>>;
  static const std::vector<GradCheckEntry> registry = {
      op_entry("add", {{4, 4}, {4, 4}}, [](const V& in) { return mean(square(add(in[0], in[1]))); }),
      op_entry("sub", {{4, 4}, {4, 4}}, [](const V& in) { return mean(square(sub(in[0], in[1]))); }),
      op_entry("mul", {{4, 4}, {4, 4}}, [](const V& in) { return sum(mul(in[0], in[1])); }),
      op_entry("scale", {{4, 4}}, [](const V& in) { return mean(square(scale(in[0], -1.7))); }),
      op_entry("add_scalar", {{4, 4}}, [](const V& in) { return mean(square(add_scalar(in[0], 0.3))); }),
      op_entry("square", {{4, 4}}, [](const V& in) { return sum(square(in[0])); }),
      op_entry("sum", {{3, 5}}, [](const V& in) { return square(sum(in[0])); }),
      op_entry("mean", {{3, 5}}, [](const V& in) { return square(mean(in[0])); }),
      op_entry("l1_mean", {{4, 4}}, [](const V& in) { return l1_mean(in[0], Tensor<double>::zeros(in[0].shape())); },
               true),
      op_entry("relu", {{4, 4}}, [](const V& in) { return mean(square(relu(in[0]))); }, true),
      op_entry("leaky_relu", {{4, 4}}, [](const V& in) { return mean(square(leaky_relu(in[0], 0.2))); }, true),
      op_entry("tanh", {{4, 4}}, [](const V& in) { return mean(square(tanh(in[0]))); }),
      op_entry("reflection_pad", {{1, 2, 4, 4}, {1, 2, 6, 6}},
               [](const V& in) { return sum(mul(reflection_pad(in[0], 1), in[1])); }),
      op_entry("conv2d", {{1, 2, 5, 5}, {3, 2, 3, 3}, {3}},
               [](const V& in) { return mean(square(conv2d(in[0], in[1], in[2], {.stride = 2, .padding = 1}))); }),
      op_entry("transposed_conv2d", {{1, 2, 4, 4}, {2, 3, 3, 3}, {3}},
               [](const V& in) { return mean(square(transposed_conv2d(in[0], in[1], in[2]))); }),
      op_entry("instance_norm", {{1, 2, 4, 4}, {2}, {2}, {1, 2, 4, 4}},
               [](const V& in) { return sum(mul(instance_norm(in[0], in[1], in[2]), in[3])); }),
      {"generator_discriminator", composition_check},
  };
  return registry;
}

std::vector<GradCheckRow> run_gradchecks(const std::vector<GradCheckEntry>& entries, int seeds, double tolerance) {
  std::vector<GradCheckRow> rows;
  for (const auto& e : entries) {
    GradCheckRow row{e.name, 0.0, true};
    for (int s = 0; s < seeds; ++s) {
      row.max_relative_error = std::max(row.max_relative_error, e.run(static_cast<std::uint64_t>(s)).max_relative_error);
    }
    row.passed = row.max_relative_error < tolerance;
    rows.push_back(row);
  }
  return rows;
}

std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-24s %-14s %s\n", "op", "max_rel_error", "status");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %-14.3e %s\n", r.name.c_str(), r.max_relative_error,
                  r.passed ? "ok" : "FAILED");
    out += line;
  }
  return out;
}

bool cmd_gradcheck(std::ostream& out, int seeds) {
  const auto rows = run_gradchecks(gradcheck_registry(), seeds);
  out << format_gradcheck_table(rows);
  return std::all_of(rows.begin(), rows.end(), [](const GradCheckRow& r) { return r.passed; });
}

}  // namespace cyclegan
