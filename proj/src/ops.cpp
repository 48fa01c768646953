#include "cyclegan/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "cyclegan/errors.hpp"

namespace cyclegan {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename T>
void require_rank4(const Tensor<T>& t, const char* op, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(op) + ": " + what + " must be rank 4, got " + shape_string(t.shape()));
  }
}

// Builds an elementwise unary op from its value and derivative functions.
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, const char* name, Fwd fwd, Deriv deriv) {
  auto in = x.values();
  Buffer<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, name, [deriv](detail::Node<T>& self) {
    auto& src = *self.inputs[0];
    if (!src.requires_grad) return;
    auto& g = src.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(src.value[i], self.value[i]);
  });
}

struct ConvGeometry {
  int channels = 0;
  int height = 0;
  int width = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;
  int out_h = 0;
  int out_w = 0;

  int patch() const { return channels * kernel_h * kernel_w; }
  int positions() const { return out_h * out_w; }
  std::size_t image_size() const { return static_cast<std::size_t>(channels) * height * width; }
};

// Unfolds every receptive field of `image` into one column of `cols`
// ([patch x positions], row-major).
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const int positions = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        T* dst = cols + static_cast<std::ptrdiff_t>((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (int oh = 0; oh < g.out_h; ++oh) {
          const int ih = oh * g.stride - g.padding + ki;
          T* row = dst + oh * g.out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill(row, row + g.out_w, T(0));
            continue;
          }
          const T* src = image + (static_cast<std::ptrdiff_t>(c) * g.height + ih) * g.width;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride - g.padding + kj;
            row[ow] = (iw >= 0 && iw < g.width) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back onto `image`.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const int positions = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        const T* src = cols + static_cast<std::ptrdiff_t>((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (int oh = 0; oh < g.out_h; ++oh) {
          const int ih = oh * g.stride - g.padding + ki;
          if (ih < 0 || ih >= g.height) continue;
          T* dst = image + (static_cast<std::ptrdiff_t>(c) * g.height + ih) * g.width;
          const T* row = src + oh * g.out_w;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride - g.padding + kj;
            if (iw >= 0 && iw < g.width) dst[iw] += row[ow];
          }
        }
      }
    }
  }
}

template <typename T>
void check_bias(const Tensor<T>& bias, int expected, const char* op) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != expected)) {
    throw ShapeError(std::string(op) + ": bias shape " + shape_string(bias.shape()) + " does not match " +
                     std::to_string(expected) + " channels");
  }
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  Buffer<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, "add", [](detail::Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  Buffer<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, "sub", [](detail::Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      const T sign = k == 0 ? T(1) : T(-1);
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  Buffer<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, "mul", [](detail::Node<T>& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  return unary(
      a, "scale", [f](T v) { return f * v; }, [f](T, T) { return f; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, double offset) {
  const T o = static_cast<T>(offset);
  return unary(
      a, "add_scalar", [o](T v) { return v + o; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(
      a, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = 0;
  for (T v : a.values()) total += v;
  return Tensor<T>::make_result({}, {total}, {a}, "sum", [](detail::Node<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  const T n = static_cast<T>(a.numel());
  T total = 0;
  for (T v : a.values()) total += v;
  return Tensor<T>::make_result({}, {total / n}, {a}, "mean", [n](detail::Node<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    const T share = self.grad[0] / n;
    for (auto& v : g) v += share;
  });
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "l1_mean");
  auto av = a.values();
  auto bv = b.values();
  const T n = static_cast<T>(av.size());
  T total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) total += std::abs(av[i] - bv[i]);
  return Tensor<T>::make_result({}, {total / n}, {a, b}, "l1_mean", [n](detail::Node<T>& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    const T share = self.grad[0] / n;
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      const T d = x.value[i] - y.value[i];
      const T s = d > 0 ? share : (d < 0 ? -share : T(0));
      if (x.requires_grad) x.ensure_grad()[i] += s;
      if (y.requires_grad) y.ensure_grad()[i] -= s;
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, "relu", [](T v) { return v > 0 ? v : T(0); }, [](T v, T) { return v > 0 ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  return unary(
      x, "leaky_relu", [s](T v) { return v > 0 ? v : s * v; }, [s](T v, T) { return v > 0 ? T(1) : s; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T out) { return T(1) - out * out; });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::relu:
      return relu(x);
    case ActivationKind::leaky_relu:
      return leaky_relu(x, act.slope);
    case ActivationKind::tanh:
      return tanh(x);
    case ActivationKind::none:
      break;
  }
  return x;
}

template <typename T>
Tensor<T> reflection_pad(const Tensor<T>& x, int pad) {
  require_rank4(x, "reflection_pad", "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (pad < 0 || pad >= h || pad >= w) {
    throw ShapeError("reflection_pad: pad " + std::to_string(pad) + " must be below min(H, W) of " +
                     shape_string(x.shape()));
  }
  if (pad == 0) return x;
  const int ph = h + 2 * pad, pw = w + 2 * pad;
  auto reflect = [](int i, int size) { return i < 0 ? -i : (i >= size ? 2 * (size - 1) - i : i); };
  // Source index of every output element, shared by forward and backward.
  std::vector<int> rows(static_cast<std::size_t>(ph)), cols(static_cast<std::size_t>(pw));
  for (int i = 0; i < ph; ++i) rows[static_cast<std::size_t>(i)] = reflect(i - pad, h);
  for (int j = 0; j < pw; ++j) cols[static_cast<std::size_t>(j)] = reflect(j - pad, w);

  auto in = x.values();
  Buffer<T> out(static_cast<std::size_t>(n) * c * ph * pw);
  const int planes = n * c;
  for (int p = 0; p < planes; ++p) {
    const T* src = in.data() + static_cast<std::ptrdiff_t>(p) * h * w;
    T* dst = out.data() + static_cast<std::ptrdiff_t>(p) * ph * pw;
    for (int i = 0; i < ph; ++i)
      for (int j = 0; j < pw; ++j) dst[i * pw + j] = src[rows[i] * w + cols[j]];
  }
  return Tensor<T>::make_result(
      {n, c, ph, pw}, std::move(out), {x}, "reflection_pad",
      [rows, cols, planes, h, w, ph, pw](detail::Node<T>& self) {
        auto& src = *self.inputs[0];
        if (!src.requires_grad) return;
        auto& g = src.ensure_grad();
        for (int p = 0; p < planes; ++p) {
          T* dst = g.data() + static_cast<std::ptrdiff_t>(p) * h * w;
          const T* up = self.grad.data() + static_cast<std::ptrdiff_t>(p) * ph * pw;
          for (int i = 0; i < ph; ++i)
            for (int j = 0; j < pw; ++j) dst[rows[i] * w + cols[j]] += up[i * pw + j];
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, Conv2dOptions options) {
  require_rank4(input, "conv2d", "input");
  require_rank4(kernel, "conv2d", "kernel");
  if (options.stride < 1 || options.padding < 0) throw ShapeError("conv2d: stride must be >= 1 and padding >= 0");
  if (kernel.dim(1) != input.dim(1)) {
    throw ShapeError("conv2d: kernel " + shape_string(kernel.shape()) + " expects " +
                     std::to_string(kernel.dim(1)) + " input channels, input " + shape_string(input.shape()) +
                     " has " + std::to_string(input.dim(1)));
  }
  ConvGeometry g;
  g.channels = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.kernel_h = kernel.dim(2);
  g.kernel_w = kernel.dim(3);
  g.stride = options.stride;
  g.padding = options.padding;
  if (g.kernel_h > g.height + 2 * g.padding || g.kernel_w > g.width + 2 * g.padding) {
    throw ShapeError("conv2d: kernel " + shape_string(kernel.shape()) + " larger than padded input " +
                     shape_string(input.shape()));
  }
  g.out_h = (g.height + 2 * g.padding - g.kernel_h) / g.stride + 1;
  g.out_w = (g.width + 2 * g.padding - g.kernel_w) / g.stride + 1;
  const int batch = input.dim(0);
  const int filters = kernel.dim(0);
  check_bias(bias, filters, "conv2d");

  const std::size_t out_plane = static_cast<std::size_t>(filters) * g.positions();
  Buffer<T> out(batch * out_plane);
  Buffer<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
  ConstMatrixMap<T> w(kernel.values().data(), filters, g.patch());
  MatrixMap<T> col_mat(cols.data(), g.patch(), g.positions());
  for (int b = 0; b < batch; ++b) {
    im2col(input.values().data() + b * g.image_size(), g, cols.data());
    MatrixMap<T> o(out.data() + b * out_plane, filters, g.positions());
    o.noalias() = w * col_mat;
    if (bias.defined()) o.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.values().data(), filters);
  }

  std::vector<Tensor<T>> inputs{input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor<T>::make_result(
      {batch, filters, g.out_h, g.out_w}, std::move(out), std::move(inputs), "conv2d",
      [g, batch, filters, out_plane](detail::Node<T>& self) {
        auto& x = *self.inputs[0];
        auto& k = *self.inputs[1];
        detail::Node<T>* b = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
        Buffer<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
        MatrixMap<T> col_mat(cols.data(), g.patch(), g.positions());
        ConstMatrixMap<T> w(k.value.data(), filters, g.patch());
        for (int n = 0; n < batch; ++n) {
          ConstMatrixMap<T> up(self.grad.data() + n * out_plane, filters, g.positions());
          if (k.requires_grad) {
            im2col(x.value.data() + n * g.image_size(), g, cols.data());
            MatrixMap<T> dw(k.ensure_grad().data(), filters, g.patch());
            dw.noalias() += up * col_mat.transpose();
          }
          if (x.requires_grad) {
            col_mat.noalias() = w.transpose() * up;
            col2im(cols.data(), g, x.ensure_grad().data() + n * g.image_size());
          }
          if (b && b->requires_grad) {
            Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(b->ensure_grad().data(), filters);
            db += up.rowwise().sum();
          }
        }
      });
}

template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                            TransposedConv2dOptions options) {
  require_rank4(input, "transposed_conv2d", "input");
  require_rank4(kernel, "transposed_conv2d", "kernel");
  if (options.stride < 1 || options.padding < 0) {
    throw ShapeError("transposed_conv2d: stride must be >= 1 and padding >= 0");
  }
  if (options.output_padding < 0 || options.output_padding >= options.stride) {
    throw ShapeError("transposed_conv2d: output padding " + std::to_string(options.output_padding) +
                     " must lie in [0, stride=" + std::to_string(options.stride) + ")");
  }
  if (kernel.dim(0) != input.dim(1)) {
    throw ShapeError("transposed_conv2d: kernel " + shape_string(kernel.shape()) + " expects " +
                     std::to_string(kernel.dim(0)) + " input channels, input " + shape_string(input.shape()) +
                     " has " + std::to_string(input.dim(1)));
  }
  const int batch = input.dim(0);
  const int in_channels = input.dim(1);
  // Geometry of the equivalent forward convolution that maps the output
  // space back onto the input grid.
  ConvGeometry g;
  g.channels = kernel.dim(1);
  g.kernel_h = kernel.dim(2);
  g.kernel_w = kernel.dim(3);
  g.stride = options.stride;
  g.padding = options.padding;
  g.height = (input.dim(2) - 1) * g.stride - 2 * g.padding + g.kernel_h + options.output_padding;
  g.width = (input.dim(3) - 1) * g.stride - 2 * g.padding + g.kernel_w + options.output_padding;
  if (g.height < 1 || g.width < 1) {
    throw ShapeError("transposed_conv2d: empty output for input " + shape_string(input.shape()));
  }
  g.out_h = input.dim(2);
  g.out_w = input.dim(3);
  check_bias(bias, g.channels, "transposed_conv2d");

  const std::size_t in_plane = static_cast<std::size_t>(in_channels) * g.positions();
  Buffer<T> out(batch * g.image_size(), T(0));
  Buffer<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
  ConstMatrixMap<T> w(kernel.values().data(), in_channels, g.patch());
  MatrixMap<T> col_mat(cols.data(), g.patch(), g.positions());
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
  for (int b = 0; b < batch; ++b) {
    ConstMatrixMap<T> y(input.values().data() + b * in_plane, in_channels, g.positions());
    col_mat.noalias() = w.transpose() * y;
    T* dst = out.data() + b * g.image_size();
    col2im(cols.data(), g, dst);
    if (bias.defined()) {
      auto bv = bias.values();
      for (int c = 0; c < g.channels; ++c) {
        T* p = dst + c * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] += bv[c];
      }
    }
  }

  std::vector<Tensor<T>> inputs{input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor<T>::make_result(
      {batch, g.channels, g.height, g.width}, std::move(out), std::move(inputs), "transposed_conv2d",
      [g, batch, in_channels, in_plane, plane](detail::Node<T>& self) {
        auto& y = *self.inputs[0];
        auto& k = *self.inputs[1];
        detail::Node<T>* b = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
        Buffer<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
        MatrixMap<T> col_mat(cols.data(), g.patch(), g.positions());
        ConstMatrixMap<T> w(k.value.data(), in_channels, g.patch());
        for (int n = 0; n < batch; ++n) {
          const T* up = self.grad.data() + n * g.image_size();
          if (y.requires_grad || k.requires_grad) im2col(up, g, cols.data());
          if (y.requires_grad) {
            MatrixMap<T> dy(y.ensure_grad().data() + n * in_plane, in_channels, g.positions());
            dy.noalias() += w * col_mat;
          }
          if (k.requires_grad) {
            ConstMatrixMap<T> yv(y.value.data() + n * in_plane, in_channels, g.positions());
            MatrixMap<T> dw(k.ensure_grad().data(), in_channels, g.patch());
            dw.noalias() += yv * col_mat.transpose();
          }
          if (b && b->requires_grad) {
            auto& db = b->ensure_grad();
            for (int c = 0; c < g.channels; ++c) {
              T acc = 0;
              const T* p = up + c * plane;
              for (std::size_t i = 0; i < plane; ++i) acc += p[i];
              db[c] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  require_rank4(input, "instance_norm", "input");
  const int batch = input.dim(0), channels = input.dim(1);
  const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
  for (const auto* p : {&gamma, &beta}) {
    if (p->rank() != 1 || p->dim(0) != channels) {
      throw ShapeError("instance_norm: affine parameter " + shape_string(p->shape()) + " does not match " +
                       std::to_string(channels) + " channels");
    }
  }
  auto x = input.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  Buffer<T> out(x.size());
  Buffer<T> normalized(x.size());
  Buffer<T> inv_std(static_cast<std::size_t>(batch) * channels);
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t offset = (static_cast<std::size_t>(n) * channels + c) * plane;
      T mu = 0;
      for (std::size_t i = 0; i < plane; ++i) mu += x[offset + i];
      mu /= static_cast<T>(plane);
      T var = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        const T d = x[offset + i] - mu;
        var += d * d;
      }
      var /= static_cast<T>(plane);
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps));
      inv_std[static_cast<std::size_t>(n) * channels + c] = rstd;
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (x[offset + i] - mu) * rstd;
        normalized[offset + i] = xh;
        out[offset + i] = gv[c] * xh + bv[c];
      }
    }
  }
  return Tensor<T>::make_result(
      input.shape(), std::move(out), {input, gamma, beta}, "instance_norm",
      [normalized = std::move(normalized), inv_std = std::move(inv_std), batch, channels,
       plane](detail::Node<T>& self) {
        auto& x = *self.inputs[0];
        auto& gm = *self.inputs[1];
        auto& bt = *self.inputs[2];
        const T m = static_cast<T>(plane);
        for (int n = 0; n < batch; ++n) {
          for (int c = 0; c < channels; ++c) {
            const std::size_t offset = (static_cast<std::size_t>(n) * channels + c) * plane;
            const T* up = self.grad.data() + offset;
            const T* xh = normalized.data() + offset;
            T sum_up = 0, sum_up_xh = 0;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_up += up[i];
              sum_up_xh += up[i] * xh[i];
            }
            if (gm.requires_grad) gm.ensure_grad()[c] += sum_up_xh;
            if (bt.requires_grad) bt.ensure_grad()[c] += sum_up;
            if (x.requires_grad) {
              const T scale_c = gm.value[c] * inv_std[static_cast<std::size_t>(n) * channels + c] / m;
              T* dx = x.ensure_grad().data() + offset;
              for (std::size_t i = 0; i < plane; ++i) dx[i] += scale_c * (m * up[i] - sum_up - xh[i] * sum_up_xh);
            }
          }
        }
      });
}

#define CYCLEGAN_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> scale(const Tensor<T>&, double);                                                      \
  template Tensor<T> add_scalar(const Tensor<T>&, double);                                                 \
  template Tensor<T> square(const Tensor<T>&);                                                             \
  template Tensor<T> sum(const Tensor<T>&);                                                                \
  template Tensor<T> mean(const Tensor<T>&);                                                               \
  template Tensor<T> l1_mean(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> relu(const Tensor<T>&);                                                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                                 \
  template Tensor<T> tanh(const Tensor<T>&);                                                               \
  template Tensor<T> activation(const Tensor<T>&, const Activation&);                                      \
  template Tensor<T> reflection_pad(const Tensor<T>&, int);                                                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dOptions);          \
  template Tensor<T> transposed_conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                       TransposedConv2dOptions);                                           \
  template Tensor<T> instance_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);

CYCLEGAN_INSTANTIATE_OPS(float)
CYCLEGAN_INSTANTIATE_OPS(double)

}  // namespace cyclegan
