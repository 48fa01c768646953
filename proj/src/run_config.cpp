#include "cyclegan/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cyclegan/errors.hpp"

namespace cyclegan {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + std::string(text) + "' is not a valid number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("'" + std::string(text) + "' is not finite");
  }
  return value;
}

int parse_int(std::string_view text, int min) {
  const int v = parse_number<int>(text);
  if (v < min) throw ConfigError("value " + std::to_string(v) + " is below the minimum " + std::to_string(min));
  return v;
}

double parse_double(std::string_view text, double min, bool exclusive_min, double max = INFINITY,
                    bool exclusive_max = false) {
  const double v = parse_number<double>(text);
  const bool low = exclusive_min ? v <= min : v < min;
  const bool high = exclusive_max ? v >= max : v > max;
  if (low || high) {
    std::ostringstream msg;
    msg << "value " << v << " outside " << (exclusive_min ? "(" : "[") << min << ", " << max
        << (exclusive_max ? ")" : "]");
    throw ConfigError(msg.str());
  }
  return v;
}

// Shortest text that parses back to exactly `v`.
std::string number(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

using Setter = std::function<void(RunConfig&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyEntry {
  ConfigKey doc;
  Setter set;
  Getter get;
  bool training = true;  // part of the TrainingConfig snapshot
};

const std::vector<KeyEntry>& entries() {
  static const std::vector<KeyEntry> table = [] {
    std::vector<KeyEntry> t;
    auto add = [&](std::string name, std::string help, Setter set, Getter get, bool training = true) {
      t.push_back({{std::move(name), {}, std::move(help)}, std::move(set), std::move(get), training});
    };
    auto path_key = [&](std::string name, std::string help, std::filesystem::path RunConfig::*field) {
      add(
          std::move(name), std::move(help), [field](RunConfig& c, std::string_view v) { c.*field = std::string(v); },
          [field](const RunConfig& c) { return (c.*field).string(); }, false);
    };

    add("lambda", "weight of the cycle-consistency term",
        [](RunConfig& c, std::string_view v) { c.training.lambda = parse_double(v, 0, false); },
        [](const RunConfig& c) { return number(c.training.lambda); });
    add("lambda_identity", "weight of the identity term (0 disables it)",
        [](RunConfig& c, std::string_view v) { c.training.lambda_identity = parse_double(v, 0, false); },
        [](const RunConfig& c) { return number(c.training.lambda_identity); });
    add("lr", "initial Adam learning rate",
        [](RunConfig& c, std::string_view v) { c.training.lr0 = parse_double(v, 0, true); },
        [](const RunConfig& c) { return number(c.training.lr0); });
    add("epochs_constant", "epochs at the initial learning rate",
        [](RunConfig& c, std::string_view v) { c.training.epochs_constant = parse_int(v, 0); },
        [](const RunConfig& c) { return std::to_string(c.training.epochs_constant); });
    add("epochs_decay", "epochs of linear decay to zero",
        [](RunConfig& c, std::string_view v) { c.training.epochs_decay = parse_int(v, 0); },
        [](const RunConfig& c) { return std::to_string(c.training.epochs_decay); });
    add("buffer_capacity", "generated images kept for discriminator updates",
        [](RunConfig& c, std::string_view v) { c.training.buffer_capacity = parse_int(v, 0); },
        [](const RunConfig& c) { return std::to_string(c.training.buffer_capacity); });
    add("adam_beta1", "Adam first-moment decay",
        [](RunConfig& c, std::string_view v) { c.training.adam_beta1 = parse_double(v, 0, false, 1, true); },
        [](const RunConfig& c) { return number(c.training.adam_beta1); });
    add("adam_beta2", "Adam second-moment decay",
        [](RunConfig& c, std::string_view v) { c.training.adam_beta2 = parse_double(v, 0, false, 1, true); },
        [](const RunConfig& c) { return number(c.training.adam_beta2); });
    add("adam_eps", "Adam denominator epsilon",
        [](RunConfig& c, std::string_view v) { c.training.adam_eps = parse_double(v, 0, true); },
        [](const RunConfig& c) { return number(c.training.adam_eps); });
    add("seed", "seed for weights, data order, buffers and synthetic data",
        [](RunConfig& c, std::string_view v) { c.training.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.training.seed); });
    add("variant", "full | gan_only | cycle_only | gan_forward | gan_backward",
        [](RunConfig& c, std::string_view v) { c.training.variant = parse_variant(v); },
        [](const RunConfig& c) { return std::string(to_string(c.training.variant)); });
    add("resolution", "square image size in pixels (multiple of 4)",
        [](RunConfig& c, std::string_view v) {
          const int r = parse_int(v, 4);
          if (r % 4 != 0) throw ConfigError("resolution must be a multiple of 4");
          c.training.resolution = r;
        },
        [](const RunConfig& c) { return std::to_string(c.training.resolution); });
    add("residual_blocks", "generator residual blocks; auto = 6 below 256 px, else 9",
        [](RunConfig& c, std::string_view v) {
          if (v == "auto") {
            c.training.residual_blocks.reset();
          } else {
            c.training.residual_blocks = parse_int(v, 0);
          }
        },
        [](const RunConfig& c) {
          return c.training.residual_blocks ? std::to_string(*c.training.residual_blocks) : std::string("auto");
        });
    add("generator_filters", "filters of the first generator layer",
        [](RunConfig& c, std::string_view v) { c.training.generator_filters = parse_int(v, 1); },
        [](const RunConfig& c) { return std::to_string(c.training.generator_filters); });
    add("discriminator_filters", "filters of the first discriminator layer",
        [](RunConfig& c, std::string_view v) { c.training.discriminator_filters = parse_int(v, 1); },
        [](const RunConfig& c) { return std::to_string(c.training.discriminator_filters); });
    add("crop", "random square crop per step (multiple of 4); 0 disables",
        [](RunConfig& c, std::string_view v) {
          const int crop = parse_int(v, 0);
          if (crop % 4 != 0) throw ConfigError("crop must be a multiple of 4");
          c.training.crop = crop;
        },
        [](const RunConfig& c) { return std::to_string(c.training.crop); });
    add("checkpoint_every", "epochs between checkpoints; 0 = only the final one",
        [](RunConfig& c, std::string_view v) { c.training.checkpoint_every = parse_int(v, 0); },
        [](const RunConfig& c) { return std::to_string(c.training.checkpoint_every); });

    add(
        "synthetic", "none | invert | channel_perm | affine_intensity | shift",
        [](RunConfig& c, std::string_view v) {
          if (v == "none") {
            c.synthetic.reset();
          } else {
            c.synthetic = parse_oracle_kind(v);
          }
        },
        [](const RunConfig& c) { return c.synthetic ? std::string(to_string(*c.synthetic)) : std::string("none"); },
        false);
    add(
        "synthetic_images", "synthetic training images per domain",
        [](RunConfig& c, std::string_view v) { c.synthetic_images = parse_int(v, 1); },
        [](const RunConfig& c) { return std::to_string(c.synthetic_images); }, false);
    add(
        "eval_images", "synthetic held-out images per domain",
        [](RunConfig& c, std::string_view v) { c.eval_images = parse_int(v, 1); },
        [](const RunConfig& c) { return std::to_string(c.eval_images); }, false);
    path_key("train_x", "PNG directory of domain X", &RunConfig::train_x);
    path_key("train_y", "PNG directory of domain Y", &RunConfig::train_y);
    path_key("eval_x", "held-out X directory (default: train_x)", &RunConfig::eval_x);
    path_key("eval_y", "held-out Y directory (default: train_y)", &RunConfig::eval_y);
    path_key("output_dir", "directory for checkpoints, loss CSV and reports", &RunConfig::output_dir);
    path_key("checkpoint", "model evaluated by eval (default: <output_dir>/final.cgck)", &RunConfig::checkpoint);
    add(
        "triptychs", "held-out samples exported as [x | G(x) | F(G(x))] strips",
        [](RunConfig& c, std::string_view v) { c.triptychs = parse_int(v, 0); },
        [](const RunConfig& c) { return std::to_string(c.triptychs); }, false);

    const RunConfig defaults;
    for (auto& e : t) e.doc.default_value = e.get(defaults);
    return t;
  }();
  return table;
}

const KeyEntry* find_key(std::string_view name) {
  for (const auto& e : entries())
    if (e.doc.name == name) return &e;
  return nullptr;
}

// Applies `key = value` lines to `cfg`; returns the line of each key seen.
std::map<std::string, int, std::less<>> apply_lines(std::string_view text, RunConfig& cfg, bool training_only) {
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const KeyEntry* entry = find_key(key);
    if (entry == nullptr || (training_only && !entry->training)) {
      throw ConfigError("unknown key '" + std::string(key) + "'", line_no);
    }
    if (auto [it, fresh] = seen.emplace(std::string(key), line_no); !fresh) {
      throw ConfigError("key '" + std::string(key) + "' already set on line " + std::to_string(it->second), line_no);
    }
    if (value.empty() && entry->training) throw ConfigError("key '" + std::string(key) + "' needs a value", line_no);
    try {
      entry->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(key) + ": " + e.what(), line_no);
    }
  }

  auto line_of = [&](std::string_view key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  if (cfg.training.total_epochs() < 1) {
    throw ConfigError("epochs_constant + epochs_decay must be at least 1",
                      std::max(line_of("epochs_constant"), line_of("epochs_decay")));
  }
  if (cfg.training.crop > cfg.training.resolution) {
    throw ConfigError("crop " + std::to_string(cfg.training.crop) + " exceeds resolution " +
                          std::to_string(cfg.training.resolution),
                      std::max(line_of("crop"), line_of("resolution")));
  }
  validate(cfg.training);
  return seen;
}

std::string format_entries(const RunConfig& cfg, bool training_only) {
  std::string out;
  for (const auto& e : entries()) {
    if (training_only && !e.training) continue;
    out += e.doc.name + " = " + e.get(cfg) + "\n";
  }
  return out;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.doc);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  apply_lines(text, cfg, false);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string format_run_config(const RunConfig& cfg) { return format_entries(cfg, false); }

std::string format_training_config(const TrainingConfig& cfg) {
  RunConfig run;
  run.training = cfg;
  return format_entries(run, true);
}

TrainingConfig parse_training_config(std::string_view text) {
  RunConfig cfg;
  apply_lines(text, cfg, true);
  return cfg.training;
}

}  // namespace cyclegan
