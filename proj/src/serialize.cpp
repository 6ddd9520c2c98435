// SPDX-License-Identifier: Apache-2.0
#include "xdv/serialize.hpp"

#include <cstring>
#include <vector>

#include "xdv/error.hpp"

namespace xdv {

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void ByteReader::need(std::size_t n, const char* what) const {
  if (remaining() < n) {
    throw FormatError(std::string("truncated data while reading ") + what + " at byte " + std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8(const char* what) {
  need(1, what);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32(const char* what) {
  need(4, what);
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64(const char* what) {
  need(8, what);
  std::uint64_t v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double ByteReader::f64(const char* what) {
  need(8, what);
  double v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

std::string ByteReader::str(const char* what) {
  const std::uint32_t n = u32(what);
  return std::string(bytes(n, what));
}

std::string_view ByteReader::bytes(std::size_t n, const char* what) {
  need(n, what);
  auto view = data_.substr(pos_, n);
  pos_ += n;
  return view;
}

void write_tensor(ByteWriter& out, const Tensor& t) {
  out.bytes(kTensorMagic);
  out.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape().dims()) out.u64(d);
  out.raw(t.data().data(), t.size() * sizeof(double));
}

Tensor read_tensor(ByteReader& in) {
  if (in.bytes(kTensorMagic.size(), "tensor magic") != kTensorMagic) {
    throw FormatError("bad tensor magic at byte " + std::to_string(in.position() - kTensorMagic.size()));
  }
  const std::uint32_t rank = in.u32("tensor rank");
  if (rank > Shape::kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " too large");
  std::vector<std::size_t> dims(rank);
  std::size_t count = 1;
  for (auto& d : dims) {
    d = in.u64("tensor extent");
    if (d == 0 || d > (std::size_t{1} << 40)) throw FormatError("tensor extent " + std::to_string(d) + " invalid");
    count *= d;
  }
  if (count > in.remaining() / sizeof(double)) throw FormatError("truncated data while reading tensor values");
  std::vector<double> values(count);
  auto raw = in.bytes(count * sizeof(double), "tensor values");
  std::memcpy(values.data(), raw.data(), raw.size());
  return Tensor(Shape(std::span<const std::size_t>(dims)), std::move(values));
}

std::string serialize_tensor(const Tensor& t) {
  ByteWriter w;
  write_tensor(w, t);
  return w.take();
}

Tensor deserialize_tensor(std::string_view bytes) {
  ByteReader r(bytes);
  Tensor t = read_tensor(r);
  if (r.remaining() != 0) throw FormatError("trailing bytes after tensor block");
  return t;
}

}  // namespace xdv
