#include "steel/numerics/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "steel/numerics/errors.h"

namespace steel {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap AsMatrix(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap AsMatrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MutMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void RequireRank2(const Value& v, const char* op) {
  if (v.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + ShapeToString(v.shape()));
  }
}

void RequireSameShape(const Value& a, const Value& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + ShapeToString(a.shape()) +
                         " vs " + ShapeToString(b.shape()));
  }
}

internal::Node& In(internal::Node& out, std::size_t i) { return *out.inputs[i]; }

template <typename Fwd, typename Deriv>
Value Elementwise(const char* op, const Value& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return MakeResult(op, x.shape(), std::move(out), {x}, [deriv](internal::Node& o) {
    internal::Node& a = In(o, 0);
    auto ga = a.GradBuffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i] * deriv(a.data[i], o.data[i]);
  });
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Value MatMul(const Value& a, const Value& b) {
  RequireRank2(a, "matmul");
  RequireRank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents differ, " + ShapeToString(a.shape()) + " x " +
                         ShapeToString(b.shape()));
  }
  std::vector<double> out(m * n);
  AsMatrix(std::span<double>(out), m, n).noalias() =
      AsMatrix(a.node()->data, m, k) * AsMatrix(b.node()->data, k, n);
  return MakeResult("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](internal::Node& o) {
    internal::Node& A = In(o, 0);
    internal::Node& B = In(o, 1);
    const auto dc = AsMatrix(o.grad, m, n);
    if (A.requires_grad) {
      AsMatrix(A.GradBuffer(), m, k).noalias() += dc * AsMatrix(B.data, k, n).transpose();
    }
    if (B.requires_grad) {
      AsMatrix(B.GradBuffer(), k, n).noalias() += AsMatrix(A.data, m, k).transpose() * dc;
    }
  });
}

Value Transpose(const Value& a) {
  RequireRank2(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  AsMatrix(std::span<double>(out), n, m) = AsMatrix(a.node()->data, m, n).transpose();
  return MakeResult("transpose", {n, m}, std::move(out), {a}, [m, n](internal::Node& o) {
    AsMatrix(In(o, 0).GradBuffer(), m, n) += AsMatrix(o.grad, n, m).transpose();
  });
}

Value Add(const Value& a, const Value& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return MakeResult("add", a.shape(), std::move(out), {a, b}, [](internal::Node& o) {
    for (std::size_t k = 0; k < 2; ++k) {
      internal::Node& x = In(o, k);
      if (!x.requires_grad) continue;
      auto g = x.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Value Sub(const Value& a, const Value& b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return MakeResult("sub", a.shape(), std::move(out), {a, b}, [](internal::Node& o) {
    internal::Node& x = In(o, 0);
    internal::Node& y = In(o, 1);
    if (x.requires_grad) {
      auto g = x.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (y.requires_grad) {
      auto g = y.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Value Mul(const Value& a, const Value& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return MakeResult("mul", a.shape(), std::move(out), {a, b}, [](internal::Node& o) {
    internal::Node& x = In(o, 0);
    internal::Node& y = In(o, 1);
    if (x.requires_grad) {
      auto g = x.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * y.data[i];
    }
    if (y.requires_grad) {
      auto g = y.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * x.data[i];
    }
  });
}

Value Scale(const Value& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return MakeResult("scale", a.shape(), std::move(out), {a}, [factor](internal::Node& o) {
    auto g = In(o, 0).GradBuffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

Value AddRow(const Value& a, const Value& row) {
  RequireRank2(a, "add_row");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (row.size() != n) {
    throw DimensionError("add_row: row of shape " + ShapeToString(row.shape()) +
                         " does not broadcast over " + ShapeToString(a.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += row.data()[c];
  return MakeResult("add_row", a.shape(), std::move(out), {a, row}, [m, n](internal::Node& o) {
    internal::Node& x = In(o, 0);
    internal::Node& b = In(o, 1);
    if (x.requires_grad) {
      auto g = x.GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (b.requires_grad) {
      auto g = b.GradBuffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += o.grad[r * n + c];
    }
  });
}

Value MulRow(const Value& a, const Value& row) {
  RequireRank2(a, "mul_row");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (row.size() != n) {
    throw DimensionError("mul_row: row of shape " + ShapeToString(row.shape()) +
                         " does not broadcast over " + ShapeToString(a.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a.data()[r * n + c] * row.data()[c];
  return MakeResult("mul_row", a.shape(), std::move(out), {a, row}, [m, n](internal::Node& o) {
    internal::Node& x = In(o, 0);
    internal::Node& w = In(o, 1);
    if (x.requires_grad) {
      auto g = x.GradBuffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[r * n + c] += o.grad[r * n + c] * w.data[c];
    }
    if (w.requires_grad) {
      auto g = w.GradBuffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += o.grad[r * n + c] * x.data[r * n + c];
    }
  });
}

Value Softmax(const Value& x, int axis) {
  RequireRank2(x, "softmax");
  if (axis != 0 && axis != 1) throw ConfigError("softmax: axis must be 0 or 1");
  const std::size_t m = x.dim(0), n = x.dim(1);
  // Work in terms of "slices": axis 1 slices are rows, axis 0 slices columns.
  const std::size_t slices = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  auto index = [=](std::size_t s, std::size_t i) {
    return axis == 1 ? s * n + i : i * n + s;
  };
  const auto in = x.data();
  std::vector<double> out(x.size());
  for (std::size_t s = 0; s < slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, in[index(s, i)]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(in[index(s, i)] - mx);
      out[index(s, i)] = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[index(s, i)] /= total;
  }
  const char* name = axis == 0 ? "softmax_axis0" : "softmax_axis1";
  return MakeResult(name, x.shape(), std::move(out), {x},
                    [slices, len, index](internal::Node& o) {
                      auto g = In(o, 0).GradBuffer();
                      // dx_i = y_i (dy_i - sum_j y_j dy_j) within each slice.
                      for (std::size_t s = 0; s < slices; ++s) {
                        double dot = 0.0;
                        for (std::size_t i = 0; i < len; ++i)
                          dot += o.data[index(s, i)] * o.grad[index(s, i)];
                        for (std::size_t i = 0; i < len; ++i) {
                          const std::size_t k = index(s, i);
                          g[k] += o.data[k] * (o.grad[k] - dot);
                        }
                      }
                    });
}

Value CausalSoftmax(const Value& scores) {
  RequireRank2(scores, "causal_softmax");
  const std::size_t m = scores.dim(0), n = scores.dim(1);
  const auto in = scores.data();
  std::vector<double> out(scores.size(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t visible = std::min(n, r + 1);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < visible; ++c) mx = std::max(mx, in[r * n + c]);
    double total = 0.0;
    for (std::size_t c = 0; c < visible; ++c) {
      out[r * n + c] = std::exp(in[r * n + c] - mx);
      total += out[r * n + c];
    }
    for (std::size_t c = 0; c < visible; ++c) out[r * n + c] /= total;
  }
  return MakeResult("causal_softmax", scores.shape(), std::move(out), {scores},
                    [m, n](internal::Node& o) {
                      auto g = In(o, 0).GradBuffer();
                      for (std::size_t r = 0; r < m; ++r) {
                        const std::size_t visible = std::min(n, r + 1);
                        double dot = 0.0;
                        for (std::size_t c = 0; c < visible; ++c)
                          dot += o.data[r * n + c] * o.grad[r * n + c];
                        for (std::size_t c = 0; c < visible; ++c) {
                          const std::size_t k = r * n + c;
                          g[k] += o.data[k] * (o.grad[k] - dot);
                        }
                      }
                    });
}

Value Sigmoid(const Value& x) {
  return Elementwise(
      "sigmoid", x, [](double v) { return StableSigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Value SiLU(const Value& x) {
  return Elementwise(
      "silu", x, [](double v) { return v * StableSigmoid(v); },
      [](double v, double) {
        const double s = StableSigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Value LogSigmoid(const Value& x) {
  return Elementwise(
      "log_sigmoid", x,
      [](double v) { return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 - StableSigmoid(v); });
}

Value Sum(const Value& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return MakeResult("sum", {1}, {total}, {x}, [](internal::Node& o) {
    auto g = In(o, 0).GradBuffer();
    for (double& v : g) v += o.grad[0];
  });
}

Value Mean(const Value& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double n = static_cast<double>(x.size());
  return MakeResult("mean", {1}, {total / n}, {x}, [n](internal::Node& o) {
    auto g = In(o, 0).GradBuffer();
    for (double& v : g) v += o.grad[0] / n;
  });
}

Value SliceRows(const Value& x, std::size_t begin, std::size_t count) {
  RequireRank2(x, "slice_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (count == 0 || begin + count > m) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + ShapeToString(x.shape()));
  }
  const auto in = x.data();
  std::vector<double> out(in.begin() + begin * n, in.begin() + (begin + count) * n);
  return MakeResult("slice_rows", {count, n}, std::move(out), {x}, [begin, n](internal::Node& o) {
    auto g = In(o, 0).GradBuffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[begin * n + i] += o.grad[i];
  });
}

Value SliceCols(const Value& x, std::size_t begin, std::size_t count) {
  RequireRank2(x, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (count == 0 || begin + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + ShapeToString(x.shape()));
  }
  const auto in = x.data();
  std::vector<double> out(m * count);
  for (std::size_t r = 0; r < m; ++r)
    std::copy_n(in.begin() + r * n + begin, count, out.begin() + r * count);
  return MakeResult("slice_cols", {m, count}, std::move(out), {x},
                    [m, n, begin, count](internal::Node& o) {
                      auto g = In(o, 0).GradBuffer();
                      for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t c = 0; c < count; ++c)
                          g[r * n + begin + c] += o.grad[r * count + c];
                    });
}

Value ConcatRows(const std::vector<Value>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const Value& p : parts) {
    RequireRank2(p, "concat_rows");
    if (p.dim(1) != n) throw DimensionError("concat_rows: column counts differ");
    m += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(m * n);
  for (const Value& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return MakeResult("concat_rows", {m, n}, std::move(out), parts, [](internal::Node& o) {
    std::size_t offset = 0;
    for (auto& in : o.inputs) {
      const std::size_t len = in->data.size();
      if (in->requires_grad) {
        auto g = in->GradBuffer();
        for (std::size_t i = 0; i < len; ++i) g[i] += o.grad[offset + i];
      }
      offset += len;
    }
  });
}

Value ConcatCols(const std::vector<Value>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const Value& p : parts) {
    RequireRank2(p, "concat_cols");
    if (p.dim(0) != m) throw DimensionError("concat_cols: row counts differ");
    n += p.dim(1);
  }
  std::vector<double> out(m * n);
  std::size_t col = 0;
  for (const Value& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(p.data().begin() + r * w, w, out.begin() + r * n + col);
    col += w;
  }
  return MakeResult("concat_cols", {m, n}, std::move(out), parts, [m, n](internal::Node& o) {
    std::size_t col = 0;
    for (auto& in : o.inputs) {
      const std::size_t w = in->shape[1];
      if (in->requires_grad) {
        auto g = in->GradBuffer();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < w; ++c) g[r * w + c] += o.grad[r * n + col + c];
      }
      col += w;
    }
  });
}

Value Reshape(const Value& x, Shape shape) {
  if (ShapeSize(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + ShapeToString(x.shape()) + " as " +
                         ShapeToString(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return MakeResult("reshape", std::move(shape), std::move(out), {x}, [](internal::Node& o) {
    auto g = In(o, 0).GradBuffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Value GatherRows(const Value& table, std::span<const std::uint32_t> ids) {
  RequireRank2(table, "gather_rows");
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= vocab) {
      throw DataError("gather_rows: id " + std::to_string(ids[t]) + " at position " +
                      std::to_string(t) + " >= " + std::to_string(vocab));
    }
    std::copy_n(table.data().begin() + ids[t] * d, d, out.begin() + t * d);
  }
  std::vector<std::uint32_t> idx(ids.begin(), ids.end());
  return MakeResult("gather_rows", {ids.size(), d}, std::move(out), {table},
                    [idx = std::move(idx), d](internal::Node& o) {
                      auto g = In(o, 0).GradBuffer();
                      for (std::size_t t = 0; t < idx.size(); ++t)
                        for (std::size_t c = 0; c < d; ++c) g[idx[t] * d + c] += o.grad[t * d + c];
                    });
}

}  // namespace steel
