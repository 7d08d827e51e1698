#include "steel/numerics/value.h"

#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "steel/numerics/errors.h"

namespace steel {

std::size_t ShapeSize(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace internal {

std::span<double> Node::GradBuffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace internal

namespace {

void ValidateShape(const Shape& shape, std::size_t data_size) {
  if (shape.empty()) throw DimensionError("shape must have at least one extent");
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("shape extents must be positive: " + ShapeToString(shape));
  }
  if (ShapeSize(shape) != data_size) {
    throw DimensionError("shape " + ShapeToString(shape) + " does not match " +
                         std::to_string(data_size) + " elements");
  }
}

#ifndef NDEBUG
void AssertFinite(const std::string& op, const std::vector<double>& data) {
  for (double v : data) {
    assert(std::isfinite(v) && "non-finite value produced by a forward op");
    if (!std::isfinite(v)) throw NumericError("non-finite output from " + op);
  }
}
#endif

std::string& BrokenOp() {
  static std::string broken;
  return broken;
}

}  // namespace

Value::Value(Shape shape, std::vector<double> data, bool requires_grad) {
  ValidateShape(shape, data.size());
  node_ = std::make_shared<internal::Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Value Value::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Value Value::Full(Shape shape, double fill, bool requires_grad) {
  const std::size_t n = ShapeSize(shape);
  return Value(std::move(shape), std::vector<double>(n, fill), requires_grad);
}

Value Value::Scalar(double v, bool requires_grad) {
  return Value({1}, {v}, requires_grad);
}

Value Value::FromRows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  if (rows.empty() || rows.front().empty()) throw DimensionError("FromRows: empty matrix");
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("FromRows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Value({rows.size(), cols}, std::move(data), requires_grad);
}

const Shape& Value::shape() const { return node_->shape; }

std::size_t Value::dim(std::size_t axis) const {
  if (axis >= rank()) throw DimensionError("axis out of range for " + ShapeToString(shape()));
  return shape()[axis];
}

std::size_t Value::size() const { return node_->data.size(); }

std::size_t Value::rows() const {
  const auto& s = shape();
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  throw DimensionError("expected rank <= 2, got " + ShapeToString(s));
}

std::size_t Value::cols() const {
  const auto& s = shape();
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw DimensionError("expected rank <= 2, got " + ShapeToString(s));
}

std::span<const double> Value::data() const { return node_->data; }

std::span<double> Value::mutable_data() {
  if (!node_->is_leaf()) throw ContractError("mutable_data() is only available on leaves");
  return node_->data;
}

double Value::at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

double Value::item() const {
  if (size() != 1) throw ContractError("item() on a value of shape " + ShapeToString(shape()));
  return node_->data[0];
}

bool Value::requires_grad() const { return node_->requires_grad; }
bool Value::is_leaf() const { return node_->is_leaf(); }
bool Value::has_grad() const { return !node_->grad.empty(); }
std::span<const double> Value::grad() const { return node_->grad; }
std::span<double> Value::mutable_grad() { return node_->GradBuffer(); }

void Value::ZeroGrad() {
  if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Value::ClearGrad() { node_->grad.clear(); }

const std::string& Value::op() const { return node_->op; }

Value Value::Detach(bool requires_grad) const {
  return Value(shape(), node_->data, requires_grad);
}

Value MakeResult(std::string op, Shape shape, std::vector<double> data,
                 const std::vector<Value>& inputs,
                 std::function<void(internal::Node&)> backward) {
  ValidateShape(shape, data.size());
#ifndef NDEBUG
  AssertFinite(op, data);
#endif
  auto node = std::make_shared<internal::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = std::move(op);
  for (const Value& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (const Value& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return Value(std::move(node));
}

void Backward(const Value& loss) {
  if (!loss) throw ContractError("Backward on an empty value");
  if (loss.size() != 1) {
    throw ContractError("Backward requires a scalar loss, got shape " +
                        ShapeToString(loss.shape()));
  }
  internal::Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; `order` ends up topologically sorted with the
  // root last.
  std::vector<internal::Node*> order;
  std::unordered_set<internal::Node*> visited;
  std::vector<std::pair<internal::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      internal::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (internal::Node* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
  }
  root->GradBuffer()[0] += 1.0;

  const std::string& broken = testing::BrokenBackward();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node* n = *it;
    if (n->is_leaf() || !n->backward) continue;
    if (!broken.empty() && n->op == broken) continue;
    n->backward(*n);
  }
}

namespace testing {

void SetBrokenBackward(std::string op) { BrokenOp() = std::move(op); }
const std::string& BrokenBackward() { return BrokenOp(); }

}  // namespace testing

}  // namespace steel
