// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "xdv/tensor.hpp"

namespace xdv {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Appends little-endian primitives to a byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  /// u32 length prefix, then the bytes.
  void str(std::string_view s);
  void bytes(std::string_view s) { buf_.append(s); }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Reads what ByteWriter wrote. Running past the end throws FormatError naming `what`.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8(const char* what);
  std::uint32_t u32(const char* what);
  std::uint64_t u64(const char* what);
  double f64(const char* what);
  std::string str(const char* what);
  std::string_view bytes(std::size_t n, const char* what);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

/// Tensor block: magic "XDVT", u32 rank, u64 extent per axis, then the raw
/// IEEE-754 doubles in row-major order.
inline constexpr std::string_view kTensorMagic = "XDVT";

void write_tensor(ByteWriter& out, const Tensor& t);
Tensor read_tensor(ByteReader& in);

std::string serialize_tensor(const Tensor& t);
Tensor deserialize_tensor(std::string_view bytes);

}  // namespace xdv
