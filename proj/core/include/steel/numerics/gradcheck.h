#pragma once

#include <functional>
#include <span>
#include <vector>

#include "steel/numerics/value.h"

namespace steel {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every
/// coordinate of x. `f` must be deterministic and return a scalar.
std::vector<double> FiniteDifferenceGradient(
    const std::function<Value(const Value&)>& f, const Value& x, double eps);

/// Same oracle, but perturbs a leaf in place and re-runs a closure that reads
/// it (used for parameters buried inside a model). The leaf is restored.
std::vector<double> FiniteDifferenceGradientInPlace(
    const std::function<double()>& f, Value& leaf, double eps);

/// ||a - b||_2 / max(||a||_2, ||b||_2), or 0 when both are zero.
double RelativeError(std::span<const double> a, std::span<const double> b);

}  // namespace steel
