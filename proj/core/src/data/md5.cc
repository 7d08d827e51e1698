#include "steel/data/md5.h"

#include <openssl/evp.h>


#include "steel/data/binary_io.h"
#include "steel/numerics/errors.h"

namespace steel::data {

Md5Digest Md5(std::span<const std::uint8_t> bytes) {
  Md5Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_md5(), nullptr) != 1 ||
      len != out.size()) {
    throw Error("MD5 computation failed");
  }
  return out;
}

Md5Digest Md5File(const std::filesystem::path& path) { return Md5(ReadFileBytes(path)); }

std::string ToHex(const Md5Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (std::uint8_t b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 15]);
  }
  return s;
}

}  // namespace steel::data
