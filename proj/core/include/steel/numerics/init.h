#pragma once

#include <cstdint>
#include <string_view>

#include "steel/numerics/value.h"

namespace steel {

enum class InitScheme { kNormal, kZeros, kOnes };

/// Std-dev used by InitScheme::kNormal.
inline constexpr double kInitStd = 0.02;

/// "normal" | "zeros" | "ones"; anything else is a ConfigError.
InitScheme ParseInitScheme(std::string_view name);

/// Deterministic in (shape, scheme, seed): same triple, identical bits.
Value SeededInit(const Shape& shape, InitScheme scheme, std::uint64_t seed,
                 bool requires_grad = true);

}  // namespace steel
