// SPDX-License-Identifier: Apache-2.0
#include "xdv/digest.hpp"

#include <openssl/evp.h>

#include "xdv/error.hpp"
#include "xdv/serialize.hpp"

namespace xdv {

Sha256 sha256(std::string_view bytes) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw Error("SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(const Sha256& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 15]);
  }
  return s;
}

std::string tensor_digest(const Tensor& t) { return to_hex(sha256(serialize_tensor(t))); }

}  // namespace xdv
