#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cyclegan/ops.hpp"
#include "cyclegan/tensor.hpp"

namespace cyclegan {

enum class LayerKind { conv7s1, down_conv, residual_block, up_conv, disc_conv, final_conv };
enum class NormKind { instance, none };
enum class PaddingKind { reflect, zero };

// One entry of the layer notation used to describe the architectures:
//   c7s1-K  7x7 conv, stride 1, reflect padding, instance norm, ReLU
//   dK      3x3 conv, stride 2, instance norm, ReLU
//   RK      residual block of two 3x3 convs with K filters each
//   uK      3x3 stride-1/2 conv (transposed, stride 2), instance norm, ReLU
//   CK      4x4 conv, stride 2, instance norm, LeakyReLU(0.2)
// final_conv has no token; discriminators always end with it.
struct LayerSpec {
  LayerKind kind = LayerKind::conv7s1;
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  NormKind norm = NormKind::instance;
  Activation activation;
  PaddingKind padding = PaddingKind::zero;

  std::string token() const;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

LayerSpec parse_layer_spec(std::string_view token);

enum class NetworkRole { generator, discriminator };

struct NetworkSpec {
  NetworkRole role = NetworkRole::generator;
  int input_channels = 3;
  std::vector<LayerSpec> layers;

  // Comma-separated token list that parse_network turns back into this spec.
  std::string notation() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Parses a whole architecture. Generator notation is comma separated
// ("c7s1-64,d128,...,c7s1-3"); its last layer loses the norm and gets the
// tanh output. Discriminator notation may use commas or dashes
// ("C64-C128-C256-C512"); the first Ck drops instance norm, the last Ck runs
// at stride 1 and a 4x4 stride-1 conv to one channel is appended.
NetworkSpec parse_network(std::string_view notation, NetworkRole role, int input_channels = 3);

struct GeneratorOptions {
  int base_filters = 64;
  std::optional<int> residual_blocks;  // default: 6 below 256 px, 9 from 256 px
  int channels = 3;
};

NetworkSpec build_generator(int resolution, const GeneratorOptions& options = {});
NetworkSpec build_discriminator(int base_filters = 64, int channels = 3);

// Input extent seen by one output element: r <- (r - 1) * stride + kernel,
// applied from the last layer back to the first.
int receptive_field(const NetworkSpec& spec);

// Named parameter tensors in a fixed order.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  void add(std::string name, Tensor<T> tensor);
  const Tensor<T>& at(std::string_view name) const;
  Tensor<T>& at(std::string_view name);
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void set_requires_grad(bool flag);
  void zero_grad();
  // Deep copy, optionally converting precision.
  template <typename U>
  ParameterSet<U> cast() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Zero kernels and biases, unit norm gains; shapes follow the spec exactly.
template <typename T>
ParameterSet<T> make_parameters(const NetworkSpec& spec);

// Runs the layers in order. Shape mismatches raise ShapeError.
template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& input);

struct Network {
  NetworkSpec spec;
  ParameterSet<float> params;

  Tensor<float> operator()(const Tensor<float>& input) const { return forward(spec, params, input); }
};

// G: X -> Y, F: Y -> X and the two PatchGAN discriminators.
struct ModelState {
  Network g;
  Network f;
  Network d_x;
  Network d_y;
  std::uint64_t seed = 0;
};

// Kernels ~ N(0, 0.02^2) from a generator seeded with `seed`; biases 0;
// instance-norm gamma 1 and beta 0. Networks are filled in the order
// G, F, D_X, D_Y.
void init_weights(ModelState& model, std::uint64_t seed);

ModelState make_model(const NetworkSpec& generator, const NetworkSpec& discriminator, std::uint64_t seed);

inline constexpr double kInitStddev = 0.02;

}  // namespace cyclegan
