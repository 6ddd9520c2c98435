// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xdv/adam.hpp"
#include "xdv/nmt.hpp"
#include "xdv/shared.hpp"

namespace xdv {

inline constexpr std::uint32_t kCheckpointVersion = 1;
/// Variant field of a checkpoint holding one translation direction.
inline constexpr std::uint32_t kTranslationModel = 0;

struct CheckpointTensor {
  std::string name;
  Tensor value;
  bool frozen = false;
};

/// Versioned container:
///   "XDVCKPT\0", u32 version, u32 variant, u64 d_h, u64 r, u64 seed, u64 epoch,
///   u32 count + (key, value) metadata strings,
///   u32 count + (name, u8 frozen, tensor block) entries,
///   u8 optimizer flag [+ Adam scalars, step, moment buffers],
///   SHA-256 of all preceding bytes.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t variant = kTranslationModel;
  std::uint64_t d_h = 0;
  std::uint64_t r = 0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<CheckpointTensor> tensors;
  std::optional<AdamState> optimizer;

  void set_meta(const std::string& key, std::string value);
  /// FormatError naming the key when absent.
  const std::string& meta(const std::string& key) const;
  const std::string* find_meta(const std::string& key) const;
  const CheckpointTensor* find(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Verifies the digest trailer before reading any field; every failure is a
/// FormatError naming the offending field.
Checkpoint parse_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(NmtModel& model, std::uint64_t seed, std::uint64_t epoch);
NmtModel nmt_from_checkpoint(const Checkpoint& ckpt);

Checkpoint to_checkpoint(SharedStack& stack, std::uint64_t seed, std::uint64_t epoch);
/// FormatError on a variant mismatch with `expected`, when given.
SharedStack shared_from_checkpoint(const Checkpoint& ckpt, std::optional<Variant> expected = std::nullopt);

}  // namespace xdv
