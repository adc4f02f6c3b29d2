#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gentrap/error.hpp"

namespace gentrap::nx {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

inline bool& grad_recording_disabled() {
  thread_local bool disabled = false;
  return disabled;
}

}  // namespace detail

/// While alive, operations on the current thread do not record a backward
/// graph. Used for inference and for finite-difference probing.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_recording_disabled()) { detail::grad_recording_disabled() = true; }
  ~NoGradGuard() { detail::grad_recording_disabled() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_recording() { return !detail::grad_recording_disabled(); }

template <class T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T{0});
    return grad.data();
  }
};

/// Dense row-major array with an optional reverse-mode gradient. Copies share
/// the underlying node; values are treated as immutable once an op has
/// consumed them.
template <class T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() : node_(std::make_shared<Node<T>>()) {}

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    if (element_count(shape) != values.size()) {
      throw DimensionError("tensor shape " + shape_string(shape) + " holds " + std::to_string(element_count(shape)) +
                           " values, got " + std::to_string(values.size()));
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
  }

  static Tensor full(Shape shape, T fill) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<T>(n, fill));
  }

  static Tensor scalar(T v, bool requires_grad = false) { return Tensor({1}, {v}, requires_grad); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return std::span<T>(node_->grad_buffer(), node_->value.size()); }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  T item() const {
    if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }

  T operator[](std::size_t flat) const { return node_->value[flat]; }

  /// Leaf copy of the values with no graph history.
  Tensor detach() const { return Tensor(shape(), node_->value); }

  const NodePtr& node() const { return node_; }

  /// Reverse pass from a scalar root; gradients accumulate into every
  /// reachable tensor flagged requires_grad.
  void backward() const {
    if (size() != 1) throw DimensionError("backward() needs a scalar root, got " + shape_string(shape()));
    if (!node_->requires_grad) return;
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node<T>* p = n->parents[next++].get();
        if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
  }

  /// Builds the output node of an op. Parents are kept (and the backward
  /// closure installed) only when recording is on and some parent needs it.
  static Tensor make_result(Shape shape, std::vector<T> values, std::initializer_list<Tensor> inputs,
                            std::function<void(Node<T>&)> backward_fn) {
    return make_result(std::move(shape), std::move(values), std::vector<Tensor>(inputs), std::move(backward_fn));
  }

  static Tensor make_result(Shape shape, std::vector<T> values, const std::vector<Tensor>& inputs,
                            std::function<void(Node<T>&)> backward_fn) {
    Tensor out(std::move(shape), std::move(values));
    if (!grad_recording()) return out;
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!any) return out;
    out.node_->requires_grad = true;
    out.node_->parents.reserve(inputs.size());
    for (const auto& t : inputs) out.node_->parents.push_back(t.node_);
    out.node_->backward_fn = std::move(backward_fn);
    return out;
  }

 private:
  NodePtr node_;
};

/// Gradient sink for parent `i` of `self`, or nullptr when that parent does
/// not take gradients.
template <class T>
T* parent_grad(Node<T>& self, std::size_t i) {
  auto& p = *self.parents[i];
  return p.requires_grad ? p.grad_buffer() : nullptr;
}

}  // namespace gentrap::nx
