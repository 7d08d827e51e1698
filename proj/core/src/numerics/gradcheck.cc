#include "steel/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "steel/numerics/errors.h"

namespace steel {

std::vector<double> FiniteDifferenceGradient(const std::function<Value(const Value&)>& f,
                                             const Value& x, double eps) {
  if (!(eps > 0)) throw ConfigError("finite differences need eps > 0");
  std::vector<double> point(x.data().begin(), x.data().end());
  std::vector<double> grad(point.size());
  auto eval = [&](const std::vector<double>& at) {
    Value y = f(Value(x.shape(), at));
    return y.item();
  };
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double plus = eval(point);
    point[i] = saved - eps;
    const double minus = eval(point);
    point[i] = saved;
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

std::vector<double> FiniteDifferenceGradientInPlace(const std::function<double()>& f, Value& leaf,
                                                    double eps) {
  if (!(eps > 0)) throw ConfigError("finite differences need eps > 0");
  auto data = leaf.mutable_data();
  std::vector<double> grad(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + eps;
    const double plus = f();
    data[i] = saved - eps;
    const double minus = f();
    data[i] = saved;
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

double RelativeError(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("RelativeError: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

}  // namespace steel
