#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uamtfl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until backward touches this node
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::string name;  // set for named parameters
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // scatters this->grad into parents

  std::size_t numel() const { return data.size(); }
  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Dense row-major tensor of 64-bit floats with an attached gradient slot.
///
/// A Tensor is a cheap handle into a define-by-run computation graph:
/// copies alias the same node. Leaves hold data (inputs, parameters);
/// non-leaves remember how to push gradients to their parents. All values
/// are checked finite on creation; a non-finite forward result throws
/// NumericError rather than propagating silently.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t rows() const;  // first extent (1 for scalars)
  std::size_t cols() const;  // second extent; 1 for rank-1 tensors

  std::span<const double> data() const;
  /// In-place mutation is restricted to leaf tensors (optimizer updates).
  std::span<double> mutable_data();
  double value() const;  // scalar tensors only
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  const std::string& name() const;

  detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_node(const char*, Shape, std::vector<double>, std::vector<Tensor>,
                          std::function<void(detail::Node&)>);
  friend class Graph;
};

/// Creates a non-leaf graph node. Used by the operation library; the
/// result requires a gradient iff any parent does.
Tensor make_node(const char* op, Shape shape, std::vector<double> data,
                 std::vector<Tensor> parents, std::function<void(detail::Node&)> backprop);

/// Throws NumericError naming `op` if any value is NaN or infinite.
void check_finite(const char* op, std::span<const double> values);

/// Owns the set of trainable leaves and drives reverse-mode
/// differentiation from a scalar loss.
///
/// backward() recomputes gradients from scratch on every call (no
/// accumulation across calls), visits each reachable node exactly once in
/// reverse topological order, and leaves a zero gradient on any tracked
/// parameter the loss does not depend on. Repeated calls over the same
/// graph produce bitwise-identical gradients.
class Graph {
 public:
  Tensor parameter(Shape shape, std::vector<double> data, std::string name);
  /// Registers an existing leaf as trainable.
  void track(const Tensor& leaf, std::string name);
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  void zero_grad();
  void backward(const Tensor& loss);

 private:
  std::vector<Tensor> params_;
};

}  // namespace uamtfl
