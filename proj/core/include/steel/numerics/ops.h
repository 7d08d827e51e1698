#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "steel/numerics/value.h"

namespace steel {

// Differentiable primitives. Unless stated otherwise they expect rank-2
// inputs; vectors of length n broadcast as a single row where noted.

/// [m x k] . [k x n] -> [m x n].
Value MatMul(const Value& a, const Value& b);
Value Transpose(const Value& a);

Value Add(const Value& a, const Value& b);
Value Sub(const Value& a, const Value& b);
/// Elementwise (Hadamard) product.
Value Mul(const Value& a, const Value& b);
Value Scale(const Value& a, double factor);

/// a [m x n] + row [n], broadcast over rows.
Value AddRow(const Value& a, const Value& row);
/// a [m x n] * row [n], broadcast over rows.
Value MulRow(const Value& a, const Value& row);

/// Numerically stable softmax. axis 0 normalizes each column, axis 1 each row.
Value Softmax(const Value& x, int axis);
/// Row softmax where entry (i, j) with j > i is masked out (weight exactly 0).
Value CausalSoftmax(const Value& scores);

Value Sigmoid(const Value& x);
Value SiLU(const Value& x);
/// log(sigmoid(x)), evaluated without overflow for large |x|.
Value LogSigmoid(const Value& x);

Value Sum(const Value& x);
Value Mean(const Value& x);

Value SliceRows(const Value& x, std::size_t begin, std::size_t count);
Value SliceCols(const Value& x, std::size_t begin, std::size_t count);
Value ConcatRows(const std::vector<Value>& parts);
Value ConcatCols(const std::vector<Value>& parts);
/// Same buffer, new shape; sizes must agree.
Value Reshape(const Value& x, Shape shape);

/// Row lookup: table [V x d], ids in [0, V) -> [ids.size() x d].
Value GatherRows(const Value& table, std::span<const std::uint32_t> ids);

}  // namespace steel
