#include "cyclegan/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "cyclegan/errors.hpp"

namespace cyclegan {

namespace {
thread_local bool g_grad_mode = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

bool grad_mode_enabled() { return g_grad_mode; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value.assign(n, value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_values(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value.assign(values.begin(), values.end());
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_values({}, {value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::make_result(Shape shape, Buffer<T> values, std::vector<Tensor> inputs, const char* op,
                                 BackwardFn backward) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  const bool tracked = g_grad_mode && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
                         return t.defined() && t.node_->requires_grad;
                       });
  if (tracked) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

template <typename T>
const detail::Node<T>& Tensor<T>::checked() const {
  if (!node_) throw Error("use of an undefined tensor");
  return *node_;
}

template <typename T>
detail::Node<T>& Tensor<T>::checked() {
  if (!node_) throw Error("use of an undefined tensor");
  return *node_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return checked().shape;
}

template <typename T>
int Tensor<T>::rank() const {
  return static_cast<int>(checked().shape.size());
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  const auto& s = checked().shape;
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

template <typename T>
std::size_t Tensor<T>::numel() const {
  return checked().value.size();
}

template <typename T>
std::span<const T> Tensor<T>::values() const {
  return checked().value;
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
  return checked().value;
}

template <typename T>
T Tensor<T>::item() const {
  const auto& n = checked();
  if (n.value.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string(n.shape));
  return n.value[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return checked().requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  auto& n = checked();
  n.requires_grad = flag;
  if (flag) n.ensure_grad();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  return checked().grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  return checked().ensure_grad();
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& g = checked().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  const auto& root = checked();
  if (root.value.size() != 1) {
    throw ShapeError("backward() requires a scalar, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) throw Error("backward() on a tensor that does not require a gradient");

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> visited;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* n : order) {
    if (n->backward) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), T(0));
    }
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  const auto& n = checked();
  auto copy = std::make_shared<detail::Node<T>>();
  copy->shape = n.shape;
  copy->value = n.value;
  return Tensor(std::move(copy));
}

template <typename T>
template <typename U>
Tensor<U> Tensor<T>::cast() const {
  const auto& n = checked();
  std::vector<U> converted(n.value.begin(), n.value.end());
  return Tensor<U>::from_values(n.shape, std::move(converted), n.requires_grad);
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<double> Tensor<float>::cast<double>() const;
template Tensor<float> Tensor<double>::cast<float>() const;
template Tensor<float> Tensor<float>::cast<float>() const;
template Tensor<double> Tensor<double>::cast<double>() const;

}  // namespace cyclegan
