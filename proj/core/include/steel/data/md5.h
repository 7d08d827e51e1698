#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace steel::data {

using Md5Digest = std::array<std::uint8_t, 16>;

Md5Digest Md5(std::span<const std::uint8_t> bytes);
Md5Digest Md5File(const std::filesystem::path& path);
std::string ToHex(const Md5Digest& digest);

}  // namespace steel::data
