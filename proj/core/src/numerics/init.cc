#include "steel/numerics/init.h"

#include <string>

#include "steel/numerics/errors.h"
#include "steel/numerics/rng.h"

namespace steel {

InitScheme ParseInitScheme(std::string_view name) {
  if (name == "normal") return InitScheme::kNormal;
  if (name == "zeros") return InitScheme::kZeros;
  if (name == "ones") return InitScheme::kOnes;
  throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

Value SeededInit(const Shape& shape, InitScheme scheme, std::uint64_t seed, bool requires_grad) {
  std::vector<double> data(ShapeSize(shape), 0.0);
  switch (scheme) {
    case InitScheme::kZeros:
      break;
    case InitScheme::kOnes:
      std::fill(data.begin(), data.end(), 1.0);
      break;
    case InitScheme::kNormal: {
      CounterRng rng(seed);
      for (double& v : data) v = kInitStd * rng.NextNormal();
      break;
    }
  }
  return Value(shape, std::move(data), requires_grad);
}

}  // namespace steel
