// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "xdv/tensor.hpp"

namespace xdv {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view bytes);
std::string to_hex(const Sha256& digest);

/// SHA-256 over the serialized tensor block (shape and values).
std::string tensor_digest(const Tensor& t);

}  // namespace xdv
