#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cyclegan/tensor.hpp"

namespace cyclegan {

// An unpaired image collection. Every sample is a 1 x 3 x R x R tensor with
// values in [-1, 1].
struct DomainDataset {
  std::vector<Tensor<float>> samples;
  std::vector<std::string> names;  // file names, or generated labels
  std::string source;
  int resolution = 0;
  std::size_t skipped = 0;  // undecodable files encountered while loading

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Reads every decodable PNG in `directory` (lexicographic file order),
// rescales it to resolution x resolution, maps bytes to [-1, 1] and then
// shuffles the order with `seed`. Undecodable files are skipped with a
// warning; an empty result throws IoError.
DomainDataset load_domain(const std::filesystem::path& directory, int resolution, std::uint64_t seed);

// Uniformly positioned crop x crop window of an N x C x H x W tensor.
Tensor<float> random_square_crop(const Tensor<float>& image, int crop, std::mt19937_64& rng);

enum class OracleKind { invert, channel_perm, affine_intensity, shift };

std::string_view to_string(OracleKind kind);
OracleKind parse_oracle_kind(std::string_view text);

// Known bijection between two synthetic domains, kept away from training
// and used only to score translations.
struct SyntheticOracle {
  OracleKind kind = OracleKind::invert;
  float scale = 0.5f;    // affine_intensity: T(x) = scale * x + offset
  float offset = 0.25f;
  int shift = 4;         // shift: horizontal translation in pixels, wrapping

  Tensor<float> forward(const Tensor<float>& x) const;
  Tensor<float> inverse(const Tensor<float>& y) const;
  bool pixelwise() const { return kind != OracleKind::shift; }
};

struct SyntheticPair {
  DomainDataset x;
  DomainDataset y;
  SyntheticOracle oracle;
};

// X: n procedurally drawn scenes (bright textured backgrounds, one or two
// darker rectangles or ellipses). Y: the oracle map applied to n further,
// independently drawn scenes, so no Y sample is the image of an X sample.
// Pixel values sit on a 1/128 grid so the pixel-wise oracles invert
// exactly.
SyntheticPair make_synthetic_pair(OracleKind kind, int n_per_domain, int resolution, std::uint64_t seed,
                                  SyntheticOracle parameters = {});

// Independent uniform draws from the two domains.
std::pair<Tensor<float>, Tensor<float>> sample_pair(const DomainDataset& dx, const DomainDataset& dy,
                                                    std::mt19937_64& rng);

// One epoch of (x index, y index) pairs: each domain is shuffled and the
// first min(|X|, |Y|) entries are zipped, so the smaller domain is visited
// exactly once and the larger one is resampled every epoch.
std::vector<std::pair<std::size_t, std::size_t>> epoch_pairs(std::size_t nx, std::size_t ny, std::mt19937_64& rng);

}  // namespace cyclegan
