#include "uamtfl/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "uamtfl/errors.hpp"

namespace uamtfl {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

void check_finite(const char* op, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << op << ": non-finite value (" << values[i] << ") at flat index " << i;
      throw NumericError(os.str());
    }
  }
}

namespace {

void validate_shape(const Shape& shape, std::size_t data_len) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data_len) {
    std::ostringstream os;
    os << "shape " << shape_str(shape) << " implies " << shape_numel(shape)
       << " elements but " << data_len << " were given";
    throw DimensionError(os.str());
  }
}

}  // namespace

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  validate_shape(shape, data.size());
  check_finite("leaf", data);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::zeros(Shape shape) {
  return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double value) {
  std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::numel() const { return node_->data.size(); }

std::size_t Tensor::rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }

std::size_t Tensor::cols() const { return node_->shape.size() >= 2 ? node_->shape[1] : 1; }

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() {
  if (!node_->leaf) {
    throw ContractError("mutable_data: only leaf tensors may be mutated in place");
  }
  return node_->data;
}

double Tensor::value() const {
  if (numel() != 1) {
    throw ContractError("value: tensor is not scalar, shape " + shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->data.at(r * cols() + c);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

bool Tensor::has_grad() const { return defined() && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) {
    throw ContractError("grad: no gradient present on tensor '" + node_->name + "'");
  }
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

const std::string& Tensor::name() const { return node_->name; }

Tensor make_node(const char* op, Shape shape, std::vector<double> data,
                 std::vector<Tensor> parents, std::function<void(detail::Node&)> backprop) {
  validate_shape(shape, data.size());
  check_finite(op, data);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->leaf = false;
  node->op = op;
  node->parents.reserve(parents.size());
  for (auto& p : parents) {
    if (!p.defined()) throw ContractError(std::string(op) + ": undefined input tensor");
    if (p.requires_grad()) node->requires_grad = true;
    node->parents.push_back(p.node_);
  }
  node->backprop = std::move(backprop);
  return Tensor(std::move(node));
}

Tensor Graph::parameter(Shape shape, std::vector<double> data, std::string name) {
  Tensor t = Tensor::from_data(std::move(shape), std::move(data));
  track(t, std::move(name));
  return t;
}

void Graph::track(const Tensor& leaf, std::string name) {
  if (!leaf.defined()) throw ContractError("track: undefined tensor");
  if (!leaf.node_->leaf) throw ContractError("track: only leaf tensors can be parameters");
  leaf.node_->requires_grad = true;
  leaf.node_->name = std::move(name);
  params_.push_back(leaf);
}

void Graph::zero_grad() {
  for (auto& p : params_) p.node_->grad.assign(p.numel(), 0.0);
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward: undefined loss tensor");
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }

  // Topological order over the requires-grad subgraph, iterative DFS so
  // deep graphs cannot overflow the stack.
  std::vector<detail::Node*> order;
  if (loss.node_->requires_grad) {
    struct Frame {
      detail::Node* node;
      std::size_t next_parent;
    };
    std::unordered_set<detail::Node*> seen;
    std::vector<Frame> stack;
    stack.push_back({loss.node(), 0});
    seen.insert(loss.node());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        detail::Node* p = f.node->parents[f.next_parent++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  // Fresh gradients every call: no accumulation across backward() calls.
  for (detail::Node* n : order) n->grad.assign(n->numel(), 0.0);
  for (auto& p : params_) p.node_->grad.assign(p.numel(), 0.0);

  if (!order.empty()) {
    loss.node_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      detail::Node* n = *it;
      if (n->backprop) n->backprop(*n);
    }
  }
}

}  // namespace uamtfl
