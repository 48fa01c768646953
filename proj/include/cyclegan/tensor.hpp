#pragma once

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <new>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cyclegan {

// Dimensions of a tensor; images follow the N,C,H,W convention. A rank-0
// shape denotes a scalar.
using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Heap storage aligned to 64 bytes. Vectorized kernels split loops by
// pointer alignment, so a fixed alignment keeps results bit-identical from
// one allocation to the next.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = (n * sizeof(T) + kAlignment - 1) / kAlignment * kAlignment;
    void* p = std::aligned_alloc(kAlignment, bytes == 0 ? kAlignment : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

namespace detail {

// One vertex of the differentiation graph. Leaves have no inputs and no
// backward function; every other node was produced by an op and knows how
// to push its gradient onto its inputs.
template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Buffer<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

// Disables graph recording on the calling thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Reference-semantics handle to a node of the differentiation graph.
// Copies alias the same storage, like tensors in most autodiff frameworks.
// Instantiated for float (training) and double (verification).
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using BackwardFn = std::function<void(detail::Node<T>&)>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  // Wraps freshly computed values as the output of an op. The node records
  // `inputs` and `backward` only when grad mode is on and some input
  // requires a gradient; otherwise the result is a plain constant.
  static Tensor make_result(Shape shape, Buffer<T> values, std::vector<Tensor> inputs, const char* op,
                            BackwardFn backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int dim(int axis) const;
  std::size_t numel() const;

  std::span<const T> values() const;
  std::span<T> mutable_values();
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  // Gradient buffer; all zeros for a gradient-tracking leaf that no loss
  // has reached yet. Empty for tensors that never carried a gradient.
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  // calls; interior gradients are recomputed each time.
  void backward() const;

  // New leaf holding a copy of the values, with no link to this graph.
  Tensor detach() const;

  template <typename U>
  Tensor<U> cast() const;

  const std::shared_ptr<detail::Node<T>>& node() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
  const detail::Node<T>& checked() const;
  detail::Node<T>& checked();

  std::shared_ptr<detail::Node<T>> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace cyclegan
