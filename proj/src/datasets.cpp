#include "cyclegan/datasets.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cyclegan/errors.hpp"
#include "cyclegan/image_io.hpp"

namespace cyclegan {

namespace fs = std::filesystem;

DomainDataset load_domain(const fs::path& directory, int resolution, std::uint64_t seed) {
  if (resolution <= 0) throw ShapeError("resolution must be positive");
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw IoError("not a directory: " + directory.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  DomainDataset out;
  out.source = directory.string();
  out.resolution = resolution;
  for (const auto& file : files) {
    RgbImage image;
    try {
      image = read_png(file);
    } catch (const IoError& e) {
      spdlog::warn("skipping {}: {}", file.string(), e.what());
      ++out.skipped;
      continue;
    }
    out.samples.push_back(image_to_tensor(resize_bilinear(image, resolution, resolution)));
    out.names.push_back(file.filename().string());
  }
  if (out.samples.empty()) {
    throw IoError("no decodable images in " + directory.string() + " (" + std::to_string(out.skipped) + " skipped)");
  }

  std::vector<std::size_t> order(out.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  DomainDataset shuffled{{}, {}, out.source, resolution, out.skipped};
  for (auto i : order) {
    shuffled.samples.push_back(out.samples[i]);
    shuffled.names.push_back(out.names[i]);
  }
  return shuffled;
}

Tensor<float> random_square_crop(const Tensor<float>& image, int crop, std::mt19937_64& rng) {
  if (image.rank() != 4) throw ShapeError("crop expects NxCxHxW, got " + shape_string(image.shape()));
  const int n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  if (crop <= 0 || crop > std::min(h, w)) {
    throw ShapeError("crop " + std::to_string(crop) + " does not fit " + shape_string(image.shape()));
  }
  const int top = std::uniform_int_distribution<int>(0, h - crop)(rng);
  const int left = std::uniform_int_distribution<int>(0, w - crop)(rng);
  if (crop == h && crop == w) return image.detach();

  std::vector<float> values(static_cast<std::size_t>(n) * c * crop * crop);
  auto src = image.values();
  std::size_t k = 0;
  for (int p = 0; p < n * c; ++p)
    for (int r = 0; r < crop; ++r)
      for (int q = 0; q < crop; ++q)
        values[k++] = src[(static_cast<std::size_t>(p) * h + top + r) * w + left + q];
  return Tensor<float>::from_values({n, c, crop, crop}, std::move(values));
}

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::invert: return "invert";
    case OracleKind::channel_perm: return "channel_perm";
    case OracleKind::affine_intensity: return "affine_intensity";
    case OracleKind::shift: return "shift";
  }
  return "unknown";
}

OracleKind parse_oracle_kind(std::string_view text) {
  for (auto k : {OracleKind::invert, OracleKind::channel_perm, OracleKind::affine_intensity, OracleKind::shift}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown oracle kind '" + std::string(text) + "'");
}

namespace {

void require_image(const Tensor<float>& t) {
  if (t.rank() != 4 || t.dim(1) != 3) throw ShapeError("oracle expects Nx3xHxW, got " + shape_string(t.shape()));
}

// (r, g, b) -> (g, b, r) when `step` is 1; step 2 undoes it.
Tensor<float> rotate_channels(const Tensor<float>& t, int step) {
  const int n = t.dim(0);
  const std::size_t plane = static_cast<std::size_t>(t.dim(2)) * t.dim(3);
  auto src = t.values();
  std::vector<float> out(src.size());
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < 3; ++ch) {
      const int from = (ch + step) % 3;
      std::copy_n(src.begin() + (b * 3 + from) * plane, plane, out.begin() + (b * 3 + ch) * plane);
    }
  return Tensor<float>::from_values(t.shape(), std::move(out));
}

Tensor<float> roll_columns(const Tensor<float>& t, int k) {
  const int w = t.dim(3);
  const int rows = t.dim(0) * t.dim(1) * t.dim(2);
  const int s = ((k % w) + w) % w;
  auto src = t.values();
  std::vector<float> out(src.size());
  for (int r = 0; r < rows; ++r)
    for (int q = 0; q < w; ++q)
      out[static_cast<std::size_t>(r) * w + (q + s) % w] = src[static_cast<std::size_t>(r) * w + q];
  return Tensor<float>::from_values(t.shape(), std::move(out));
}

template <class F>
Tensor<float> map_values(const Tensor<float>& t, F f) {
  auto src = t.values();
  std::vector<float> out(src.size());
  std::transform(src.begin(), src.end(), out.begin(), f);
  return Tensor<float>::from_values(t.shape(), std::move(out));
}

}  // namespace

Tensor<float> SyntheticOracle::forward(const Tensor<float>& x) const {
  require_image(x);
  switch (kind) {
    case OracleKind::invert: return map_values(x, [](float v) { return -v; });
    case OracleKind::channel_perm: return rotate_channels(x, 1);
    case OracleKind::affine_intensity: {
      const float a = scale, b = offset;
      return map_values(x, [a, b](float v) { return a * v + b; });
    }
    case OracleKind::shift: return roll_columns(x, shift);
  }
  throw ConfigError("unknown oracle kind");
}

Tensor<float> SyntheticOracle::inverse(const Tensor<float>& y) const {
  require_image(y);
  switch (kind) {
    case OracleKind::invert: return map_values(y, [](float v) { return -v; });
    case OracleKind::channel_perm: return rotate_channels(y, 2);
    case OracleKind::affine_intensity: {
      const float a = scale, b = offset;
      return map_values(y, [a, b](float v) { return (v - b) / a; });
    }
    case OracleKind::shift: return roll_columns(y, -shift);
  }
  throw ConfigError("unknown oracle kind");
}

namespace {

constexpr float kGrid = 128.0f;

// Scene colors in 1/128 steps. The background mean is fixed per domain and
// shape colors come from a small palette: the generators normalize away
// global per-channel offsets, so only content that survives that can be
// translated.
constexpr int kBackground[3] = {96, 64, 80};
constexpr int kTexture = 16;
constexpr int kPalette[4][3] = {{-19, 6, -6}, {0, -32, 22}, {-29, -22, -35}, {38, -13, -26}};

// Bright background (flat, a ramp or stripes) with one or two darker
// rectangles or ellipses.
Tensor<float> draw_scene(int res, std::mt19937_64& rng) {
  const std::size_t plane = static_cast<std::size_t>(res) * res;
  std::vector<float> v(plane * 3);

  const int texture = std::uniform_int_distribution<int>(0, 3)(rng);
  const int sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  const int phase = std::uniform_int_distribution<int>(0, 7)(rng);
  for (int r = 0; r < res; ++r)
    for (int q = 0; q < res; ++q) {
      int offset = 0;
      if (texture == 1 || texture == 2) {
        const int t = texture == 1 ? q : r;
        offset = sign * static_cast<int>(std::lround(kTexture * (2.0 * t / (res - 1) - 1.0)));
      } else if (texture == 3) {
        offset = ((q + phase) / 4) % 2 == 0 ? kTexture : -kTexture;
      }
      for (int ch = 0; ch < 3; ++ch)
        v[ch * plane + static_cast<std::size_t>(r) * res + q] = (kBackground[ch] + offset) / kGrid;
    }

  const int shapes = std::uniform_int_distribution<int>(1, 2)(rng);
  std::uniform_int_distribution<int> extent(std::max(2, res / 6), std::max(2, res / 2));
  std::uniform_int_distribution<int> position(0, res - 1);
  std::uniform_int_distribution<int> swatch(0, 3);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = std::bernoulli_distribution(0.5)(rng);
    const int hh = extent(rng), ww = extent(rng);
    const int cy = position(rng), cx = position(rng);
    const int* color = kPalette[swatch(rng)];
    for (int r = 0; r < res; ++r)
      for (int q = 0; q < res; ++q) {
        const double dy = (r - cy) / (hh / 2.0), dx = (q - cx) / (ww / 2.0);
        const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (!inside) continue;
        for (int ch = 0; ch < 3; ++ch) v[ch * plane + static_cast<std::size_t>(r) * res + q] = color[ch] / kGrid;
      }
  }
  return Tensor<float>::from_values({1, 3, res, res}, std::move(v));
}

}  // namespace

SyntheticPair make_synthetic_pair(OracleKind kind, int n_per_domain, int resolution, std::uint64_t seed,
                                  SyntheticOracle parameters) {
  if (n_per_domain < 1) throw ConfigError("synthetic domains need at least one image");
  if (resolution < 4) throw ShapeError("synthetic resolution must be at least 4");
  SyntheticPair pair;
  pair.oracle = parameters;
  pair.oracle.kind = kind;
  const std::string label = "synthetic:" + std::string(to_string(kind));
  pair.x = DomainDataset{{}, {}, label + ":x", resolution, 0};
  pair.y = DomainDataset{{}, {}, label + ":y", resolution, 0};

  // Separate streams keep the Y preimages independent of the X scenes.
  std::seed_seq x_seq{seed, std::uint64_t{0x58}};
  std::seed_seq y_seq{seed, std::uint64_t{0x59}};
  std::mt19937_64 x_rng(x_seq), y_rng(y_seq);
  for (int i = 0; i < n_per_domain; ++i) {
    pair.x.samples.push_back(draw_scene(resolution, x_rng));
    pair.x.names.push_back("x" + std::to_string(i) + ".png");
  }
  for (int i = 0; i < n_per_domain; ++i) {
    pair.y.samples.push_back(pair.oracle.forward(draw_scene(resolution, y_rng)));
    pair.y.names.push_back("y" + std::to_string(i) + ".png");
  }
  return pair;
}

std::pair<Tensor<float>, Tensor<float>> sample_pair(const DomainDataset& dx, const DomainDataset& dy,
                                                    std::mt19937_64& rng) {
  if (dx.empty() || dy.empty()) throw ShapeError("cannot sample from an empty domain");
  const auto i = std::uniform_int_distribution<std::size_t>(0, dx.size() - 1)(rng);
  const auto j = std::uniform_int_distribution<std::size_t>(0, dy.size() - 1)(rng);
  return {dx.samples[i], dy.samples[j]};
}

std::vector<std::pair<std::size_t, std::size_t>> epoch_pairs(std::size_t nx, std::size_t ny, std::mt19937_64& rng) {
  if (nx == 0 || ny == 0) throw ShapeError("cannot sample from an empty domain");
  std::vector<std::size_t> px(nx), py(ny);
  std::iota(px.begin(), px.end(), 0);
  std::iota(py.begin(), py.end(), 0);
  std::shuffle(px.begin(), px.end(), rng);
  std::shuffle(py.begin(), py.end(), rng);
  const std::size_t steps = std::min(nx, ny);
  std::vector<std::pair<std::size_t, std::size_t>> out(steps);
  for (std::size_t i = 0; i < steps; ++i) out[i] = {px[i], py[i]};
  return out;
}

}  // namespace cyclegan
