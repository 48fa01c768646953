#include "cyclegan/networks.hpp"

#include <charconv>
#include <random>

#include "cyclegan/errors.hpp"

namespace cyclegan {

namespace {

int parse_count(std::string_view digits, std::string_view token) {
  int value = 0;
  const auto* end = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(digits.data(), end, value);
  if (digits.empty() || ec != std::errc() || ptr != end || value <= 0) {
    throw ParseError("unrecognized layer token '" + std::string(token) + "'");
  }
  return value;
}

LayerSpec final_conv_spec() {
  LayerSpec s;
  s.kind = LayerKind::final_conv;
  s.filters = 1;
  s.kernel = 4;
  s.stride = 1;
  s.norm = NormKind::none;
  s.activation = Activation::none();
  s.padding = PaddingKind::zero;
  return s;
}

std::vector<std::string_view> split_tokens(std::string_view notation, bool allow_dash) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= notation.size(); ++i) {
    const bool boundary = i == notation.size() || notation[i] == ',' || (allow_dash && notation[i] == '-');
    if (!boundary) continue;
    auto token = notation.substr(start, i - start);
    while (!token.empty() && (token.front() == ' ' || token.front() == '\n')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\n')) token.remove_suffix(1);
    if (token.empty()) throw ParseError("empty layer token in '" + std::string(notation) + "'");
    tokens.push_back(token);
    start = i + 1;
  }
  return tokens;
}

std::string layer_name(std::size_t index) { return "layer" + std::to_string(index); }

template <typename T>
void add_conv_params(ParameterSet<T>& params, const std::string& prefix, Shape kernel_shape, int bias_size,
                     bool with_norm, int norm_channels) {
  params.add(prefix + ".weight", Tensor<T>::zeros(std::move(kernel_shape)));
  params.add(prefix + ".bias", Tensor<T>::zeros({bias_size}));
  if (with_norm) {
    params.add(prefix + ".gamma", Tensor<T>::full({norm_channels}, T(1)));
    params.add(prefix + ".beta", Tensor<T>::zeros({norm_channels}));
  }
}

template <typename T>
Tensor<T> normalize(const Tensor<T>& x, const ParameterSet<T>& params, const std::string& prefix, NormKind norm) {
  if (norm == NormKind::none) return x;
  return instance_norm(x, params.at(prefix + ".gamma"), params.at(prefix + ".beta"));
}

}  // namespace

std::string LayerSpec::token() const {
  switch (kind) {
    case LayerKind::conv7s1:
      return "c7s1-" + std::to_string(filters);
    case LayerKind::down_conv:
      return "d" + std::to_string(filters);
    case LayerKind::residual_block:
      return "R" + std::to_string(filters);
    case LayerKind::up_conv:
      return "u" + std::to_string(filters);
    case LayerKind::disc_conv:
      return "C" + std::to_string(filters);
    case LayerKind::final_conv:
      break;
  }
  return {};
}

LayerSpec parse_layer_spec(std::string_view token) {
  LayerSpec s;
  if (token.starts_with("c7s1-")) {
    s.kind = LayerKind::conv7s1;
    s.filters = parse_count(token.substr(5), token);
    s.kernel = 7;
    s.stride = 1;
    s.activation = Activation::relu();
    s.padding = PaddingKind::reflect;
    return s;
  }
  if (token.size() < 2) throw ParseError("unrecognized layer token '" + std::string(token) + "'");
  const int filters = parse_count(token.substr(1), token);
  s.filters = filters;
  s.norm = NormKind::instance;
  switch (token.front()) {
    case 'd':
      s.kind = LayerKind::down_conv;
      s.kernel = 3;
      s.stride = 2;
      s.activation = Activation::relu();
      s.padding = PaddingKind::zero;
      return s;
    case 'R':
      s.kind = LayerKind::residual_block;
      s.kernel = 3;
      s.stride = 1;
      s.activation = Activation::relu();
      s.padding = PaddingKind::reflect;
      return s;
    case 'u':
      s.kind = LayerKind::up_conv;
      s.kernel = 3;
      s.stride = 2;
      s.activation = Activation::relu();
      s.padding = PaddingKind::zero;
      return s;
    case 'C':
      s.kind = LayerKind::disc_conv;
      s.kernel = 4;
      s.stride = 2;
      s.activation = Activation::leaky_relu(0.2);
      s.padding = PaddingKind::zero;
      return s;
    default:
      break;
  }
  throw ParseError("unrecognized layer token '" + std::string(token) + "'");
}

std::string NetworkSpec::notation() const {
  std::string out;
  for (const auto& layer : layers) {
    if (layer.kind == LayerKind::final_conv) continue;
    if (!out.empty()) out += ',';
    out += layer.token();
  }
  return out;
}

NetworkSpec parse_network(std::string_view notation, NetworkRole role, int input_channels) {
  NetworkSpec spec;
  spec.role = role;
  spec.input_channels = input_channels;
  if (input_channels <= 0) throw ParseError("input channel count must be positive");

  if (role == NetworkRole::generator) {
    for (auto token : split_tokens(notation, false)) {
      auto layer = parse_layer_spec(token);
      if (layer.kind == LayerKind::disc_conv) {
        throw ParseError("discriminator layer '" + std::string(token) + "' in generator notation");
      }
      spec.layers.push_back(layer);
    }
    if (spec.layers.back().kind != LayerKind::conv7s1) {
      throw ParseError("generator notation must end with a c7s1-K layer: '" + std::string(notation) + "'");
    }
    spec.layers.back().norm = NormKind::none;
    spec.layers.back().activation = Activation::tanh();
    return spec;
  }

  for (auto token : split_tokens(notation, true)) {
    auto layer = parse_layer_spec(token);
    if (layer.kind != LayerKind::disc_conv) {
      throw ParseError("layer '" + std::string(token) + "' is not a discriminator Ck layer");
    }
    spec.layers.push_back(layer);
  }
  spec.layers.front().norm = NormKind::none;
  // Stride 1 on the last Ck keeps the receptive field at 70 pixels.
  spec.layers.back().stride = 1;
  spec.layers.push_back(final_conv_spec());
  return spec;
}

NetworkSpec build_generator(int resolution, const GeneratorOptions& options) {
  if (resolution <= 0 || resolution % 4 != 0) {
    throw ShapeError("generator resolution " + std::to_string(resolution) + " is not divisible by 4");
  }
  if (options.base_filters <= 0) throw ShapeError("generator base filter count must be positive");
  const int blocks = options.residual_blocks.value_or(resolution >= 256 ? 9 : 6);
  if (blocks < 0) throw ShapeError("residual block count must be non-negative");
  const int k = options.base_filters;
  std::string notation = "c7s1-" + std::to_string(k) + ",d" + std::to_string(2 * k) + ",d" + std::to_string(4 * k);
  for (int i = 0; i < blocks; ++i) notation += ",R" + std::to_string(4 * k);
  notation += ",u" + std::to_string(2 * k) + ",u" + std::to_string(k) + ",c7s1-" + std::to_string(options.channels);
  return parse_network(notation, NetworkRole::generator, options.channels);
}

NetworkSpec build_discriminator(int base_filters, int channels) {
  const int k = base_filters;
  return parse_network("C" + std::to_string(k) + ",C" + std::to_string(2 * k) + ",C" + std::to_string(4 * k) + ",C" +
                           std::to_string(8 * k),
                       NetworkRole::discriminator, channels);
}

int receptive_field(const NetworkSpec& spec) {
  int field = 1;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (it->kind == LayerKind::residual_block || it->kind == LayerKind::up_conv) {
      throw ShapeError("receptive_field needs a plain convolution chain; found '" + it->token() + "'");
    }
    field = (field - 1) * it->stride + it->kernel;
  }
  return field;
}

template <typename T>
void ParameterSet<T>::add(std::string name, Tensor<T> tensor) {
  if (index_.contains(name)) throw Error("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(tensor));
}

template <typename T>
const Tensor<T>& ParameterSet<T>::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

template <typename T>
Tensor<T>& ParameterSet<T>::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

template <typename T>
bool ParameterSet<T>::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

template <typename T>
void ParameterSet<T>::set_requires_grad(bool flag) {
  for (auto& [name, t] : entries_) t.set_requires_grad(flag);
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

template <typename T>
template <typename U>
ParameterSet<U> ParameterSet<T>::cast() const {
  ParameterSet<U> out;
  for (const auto& [name, t] : entries_) {
    auto copy = t.detach().template cast<U>();
    if (t.requires_grad()) copy.set_requires_grad(true);
    out.add(name, std::move(copy));
  }
  return out;
}

template <typename T>
ParameterSet<T> make_parameters(const NetworkSpec& spec) {
  ParameterSet<T> params;
  int channels = spec.input_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const auto prefix = layer_name(i);
    const bool norm = layer.norm == NormKind::instance;
    switch (layer.kind) {
      case LayerKind::residual_block:
        if (layer.filters != channels) {
          throw ShapeError("residual block '" + layer.token() + "' receives " + std::to_string(channels) +
                           " channels; both convolutions must keep the width");
        }
        add_conv_params(params, prefix + ".a", {layer.filters, channels, layer.kernel, layer.kernel}, layer.filters,
                        norm, layer.filters);
        add_conv_params(params, prefix + ".b", {layer.filters, layer.filters, layer.kernel, layer.kernel},
                        layer.filters, norm, layer.filters);
        break;
      case LayerKind::up_conv:
        add_conv_params(params, prefix, {channels, layer.filters, layer.kernel, layer.kernel}, layer.filters, norm,
                        layer.filters);
        break;
      default:
        add_conv_params(params, prefix, {layer.filters, channels, layer.kernel, layer.kernel}, layer.filters, norm,
                        layer.filters);
        break;
    }
    channels = layer.filters;
  }
  return params;
}

template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& input) {
  if (input.rank() != 4 || input.dim(1) != spec.input_channels) {
    throw ShapeError("network expects N x " + std::to_string(spec.input_channels) + " x H x W input, got " +
                     shape_string(input.shape()));
  }
  Tensor<T> x = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const auto prefix = layer_name(i);
    switch (layer.kind) {
      case LayerKind::conv7s1: {
        const int pad = layer.kernel / 2;
        auto padded = layer.padding == PaddingKind::reflect ? reflection_pad(x, pad) : x;
        const int zero_pad = layer.padding == PaddingKind::reflect ? 0 : pad;
        auto y = conv2d(padded, params.at(prefix + ".weight"), params.at(prefix + ".bias"),
                        {.stride = layer.stride, .padding = zero_pad});
        x = activation(normalize(y, params, prefix, layer.norm), layer.activation);
        break;
      }
      case LayerKind::down_conv: {
        auto y = conv2d(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"),
                        {.stride = layer.stride, .padding = layer.kernel / 2});
        x = activation(normalize(y, params, prefix, layer.norm), layer.activation);
        break;
      }
      case LayerKind::residual_block: {
        // pad-conv-norm-relu-pad-conv-norm, then the skip connection.
        const int pad = layer.kernel / 2;
        auto h = conv2d(reflection_pad(x, pad), params.at(prefix + ".a.weight"), params.at(prefix + ".a.bias"));
        h = activation(normalize(h, params, prefix + ".a", layer.norm), layer.activation);
        h = conv2d(reflection_pad(h, pad), params.at(prefix + ".b.weight"), params.at(prefix + ".b.bias"));
        h = normalize(h, params, prefix + ".b", layer.norm);
        x = add(x, h);
        break;
      }
      case LayerKind::up_conv: {
        auto y = transposed_conv2d(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"),
                                   {.stride = layer.stride, .padding = layer.kernel / 2, .output_padding = 1});
        x = activation(normalize(y, params, prefix, layer.norm), layer.activation);
        break;
      }
      case LayerKind::disc_conv:
      case LayerKind::final_conv: {
        auto y = conv2d(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"),
                        {.stride = layer.stride, .padding = 1});
        x = activation(normalize(y, params, prefix, layer.norm), layer.activation);
        break;
      }
    }
  }
  return x;
}

void init_weights(ModelState& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStddev);
  for (Network* net : {&model.g, &model.f, &model.d_x, &model.d_y}) {
    for (auto& [name, tensor] : net->params) {
      auto values = tensor.mutable_values();
      if (name.ends_with(".weight")) {
        for (auto& v : values) v = static_cast<float>(normal(rng));
      } else if (name.ends_with(".gamma")) {
        std::fill(values.begin(), values.end(), 1.0f);
      } else {
        std::fill(values.begin(), values.end(), 0.0f);
      }
    }
  }
  model.seed = seed;
}

ModelState make_model(const NetworkSpec& generator, const NetworkSpec& discriminator, std::uint64_t seed) {
  ModelState model;
  model.g = {generator, make_parameters<float>(generator)};
  model.f = {generator, make_parameters<float>(generator)};
  model.d_x = {discriminator, make_parameters<float>(discriminator)};
  model.d_y = {discriminator, make_parameters<float>(discriminator)};
  init_weights(model, seed);
  return model;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template ParameterSet<double> ParameterSet<float>::cast<double>() const;
template ParameterSet<float> ParameterSet<float>::cast<float>() const;
template ParameterSet<float> ParameterSet<double>::cast<float>() const;
template ParameterSet<float> make_parameters<float>(const NetworkSpec&);
template ParameterSet<double> make_parameters<double>(const NetworkSpec&);
template Tensor<float> forward(const NetworkSpec&, const ParameterSet<float>&, const Tensor<float>&);
template Tensor<double> forward(const NetworkSpec&, const ParameterSet<double>&, const Tensor<double>&);

}  // namespace cyclegan
