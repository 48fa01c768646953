#pragma once

#include "cyclegan/tensor.hpp"

namespace cyclegan {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;  // zero padding on every side
};

// Transposed convolution; the default realizes the exact 2x upsampling
// layer used by the generator decoder.
struct TransposedConv2dOptions {
  int stride = 2;
  int padding = 1;
  int output_padding = 1;
};

enum class ActivationKind { none, relu, leaky_relu, tanh };

struct Activation {
  ActivationKind kind = ActivationKind::none;
  double slope = 0.2;  // leaky_relu only

  static Activation none() { return {}; }
  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::leaky_relu, slope}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

inline constexpr double kInstanceNormEps = 1e-5;

// Elementwise arithmetic on same-shape tensors.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, double factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, double offset);
template <typename T>
Tensor<T> square(const Tensor<T>& a);

// Reductions to a rank-0 tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

// mean(|a - b|) over all elements; the subgradient at a == b is 0.
template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> activation(const Tensor<T>& x, const Activation& act);

// Mirror padding of the two spatial axes of an N,C,H,W tensor; the border
// element itself is not repeated. Requires pad < min(H, W).
template <typename T>
Tensor<T> reflection_pad(const Tensor<T>& x, int pad);

// input [N,C,H,W], kernel [K,C,kh,kw], bias [K] (may be undefined)
// -> [N,K,(H+2p-kh)/s+1,(W+2p-kw)/s+1]
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Conv2dOptions options = {});

// Adjoint of conv2d with the same kernel layout: input [N,K,H,W],
// kernel [K,C,kh,kw], bias [C] -> [N,C,(H-1)s-2p+kh+op,(W-1)s-2p+kw+op].
template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                            TransposedConv2dOptions options = {});

// Per sample and channel: gamma * (x - mean) / sqrt(var + eps) + beta with
// the population variance over the H*W elements.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                        double eps = kInstanceNormEps);

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}

}  // namespace cyclegan
