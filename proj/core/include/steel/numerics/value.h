#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace steel {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

// One recorded operation. Leaves have no inputs and no backward rule.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty == absent
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the grads of its inputs.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return inputs.empty() && !backward; }
  // Allocates a zero grad buffer on first use.
  std::span<double> GradBuffer();
};

}  // namespace internal

/// Dense row-major array of doubles with an optional gradient. Copies are
/// shallow: two Values constructed from one another share storage and graph
/// position.
class Value {
 public:
  Value() = default;

  /// Creates a leaf.
  Value(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Value Zeros(Shape shape, bool requires_grad = false);
  static Value Full(Shape shape, double fill, bool requires_grad = false);
  static Value Scalar(double v, bool requires_grad = false);
  /// Rank-2 leaf from nested rows; all rows must have equal length.
  static Value FromRows(const std::vector<std::vector<double>>& rows,
                        bool requires_grad = false);

  explicit operator bool() const { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;
  /// Extents of a rank-2 value (rank-1 values report rows() == 1).
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  /// Mutable access to a leaf's buffer (optimizers, finite differences).
  std::span<double> mutable_data();
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();
  void ClearGrad();

  const std::string& op() const;

  /// Copies data into a fresh leaf with no history.
  Value Detach(bool requires_grad = false) const;

  internal::Node* node() const { return node_.get(); }
  const std::shared_ptr<internal::Node>& node_ptr() const { return node_; }

 private:
  explicit Value(std::shared_ptr<internal::Node> node) : node_(std::move(node)) {}
  friend Value MakeResult(std::string op, Shape shape, std::vector<double> data,
                          const std::vector<Value>& inputs,
                          std::function<void(internal::Node&)> backward);

  std::shared_ptr<internal::Node> node_;
};

/// Records an operation. When no input requires a gradient the result is a
/// plain constant and the backward rule is discarded.
Value MakeResult(std::string op, Shape shape, std::vector<double> data,
                 const std::vector<Value>& inputs,
                 std::function<void(internal::Node&)> backward);

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
/// interior gradients are recomputed each call.
void Backward(const Value& loss);

namespace testing {

/// Makes Backward skip the rule of every node whose op name equals `op`.
/// Used to prove the gradient checker catches a wrong rule. Empty clears it.
void SetBrokenBackward(std::string op);
const std::string& BrokenBackward();

}  // namespace testing

}  // namespace steel
