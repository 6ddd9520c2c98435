// SPDX-License-Identifier: Apache-2.0
#include "xdv/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "xdv/digest.hpp"
#include "xdv/error.hpp"
#include "xdv/serialize.hpp"

namespace xdv {
namespace {

constexpr std::string_view kMagic{"XDVCKPT\0", 8};

std::size_t meta_size(const Checkpoint& c, const std::string& key) {
  const std::string& v = c.meta(key);
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(n);
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint field " + key + ": not an unsigned integer ('" + v + "')");
  }
}

void store(Checkpoint& c, std::vector<NamedTensor> params) {
  for (const auto& p : params) c.tensors.push_back({p.name, *p.tensor, !p.tensor->requires_grad()});
}

void restore(const Checkpoint& c, std::vector<NamedTensor> params) {
  if (c.tensors.size() != params.size()) {
    throw FormatError("checkpoint tensors: expected " + std::to_string(params.size()) + ", found " +
                      std::to_string(c.tensors.size()));
  }
  for (const auto& p : params) {
    const CheckpointTensor* t = c.find(p.name);
    if (!t) throw FormatError("checkpoint tensor " + p.name + ": missing");
    if (!(t->value.shape() == p.tensor->shape())) {
      throw FormatError("checkpoint tensor " + p.name + ": shape " + t->value.shape().to_string() + ", expected " +
                        p.tensor->shape().to_string());
    }
    std::memcpy(p.tensor->data().data(), t->value.data().data(), t->value.size() * sizeof(double));
    p.tensor->set_requires_grad(!t->frozen);
  }
}

}  // namespace

void Checkpoint::set_meta(const std::string& key, std::string value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(key, std::move(value));
}

const std::string* Checkpoint::find_meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

const std::string& Checkpoint::meta(const std::string& key) const {
  if (const std::string* v = find_meta(key)) return *v;
  throw FormatError("checkpoint metadata " + key + ": missing");
}

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(c.version);
  w.u32(c.variant);
  w.u64(c.d_h);
  w.u64(c.r);
  w.u64(c.seed);
  w.u64(c.epoch);
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    w.str(t.name);
    w.u8(t.frozen ? 1 : 0);
    write_tensor(w, t.value);
  }
  w.u8(c.optimizer ? 1 : 0);
  if (c.optimizer) {
    const AdamState& s = *c.optimizer;
    w.f64(s.config.alpha);
    w.f64(s.config.beta1);
    w.f64(s.config.beta2);
    w.f64(s.config.epsilon);
    w.u64(s.step);
    w.u32(static_cast<std::uint32_t>(s.m.size()));
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      w.u64(s.m[i].size());
      w.raw(s.m[i].data(), s.m[i].size() * sizeof(double));
      w.raw(s.v[i].data(), s.v[i].size() * sizeof(double));
    }
  }
  const Sha256 digest = sha256(w.buffer());
  w.raw(digest.data(), digest.size());
  return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  const std::size_t trailer = std::tuple_size_v<Sha256>;
  if (bytes.size() < kMagic.size() + trailer) throw FormatError("checkpoint header: truncated file");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw FormatError("checkpoint magic: not a checkpoint file");
  const std::string_view body = bytes.substr(0, bytes.size() - trailer);
  const Sha256 digest = sha256(body);
  if (std::memcmp(digest.data(), bytes.data() + body.size(), trailer) != 0) {
    throw FormatError("checkpoint digest: mismatch (file is truncated or corrupt)");
  }

  ByteReader in(body);
  in.bytes(kMagic.size(), "magic");
  Checkpoint c;
  c.version = in.u32("version");
  if (c.version != kCheckpointVersion) {
    throw FormatError("checkpoint version: " + std::to_string(c.version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  c.variant = in.u32("variant");
  c.d_h = in.u64("d_h");
  c.r = in.u64("r");
  c.seed = in.u64("seed");
  c.epoch = in.u64("epoch");
  const std::uint32_t n_meta = in.u32("metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = in.str("metadata key");
    std::string v = in.str("metadata value");
    c.metadata.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = in.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    CheckpointTensor t;
    t.name = in.str("tensor name");
    t.frozen = in.u8("frozen flag") != 0;
    t.value = read_tensor(in);
    c.tensors.push_back(std::move(t));
  }
  if (in.u8("optimizer flag") != 0) {
    AdamState s;
    s.config.alpha = in.f64("adam alpha");
    s.config.beta1 = in.f64("adam beta1");
    s.config.beta2 = in.f64("adam beta2");
    s.config.epsilon = in.f64("adam epsilon");
    s.step = in.u64("adam step");
    const std::uint32_t n = in.u32("adam buffer count");
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint64_t len = in.u64("adam buffer length");
      if (len > in.remaining() / (2 * sizeof(double))) throw FormatError("adam buffer length: exceeds file size");
      std::vector<double> m(len), v(len);
      const auto mb = in.bytes(len * sizeof(double), "adam m");
      std::memcpy(m.data(), mb.data(), mb.size());
      const auto vb = in.bytes(len * sizeof(double), "adam v");
      std::memcpy(v.data(), vb.data(), vb.size());
      s.m.push_back(std::move(m));
      s.v.push_back(std::move(v));
    }
    c.optimizer = std::move(s);
  }
  if (in.remaining() != 0) throw FormatError("checkpoint trailer: unexpected bytes after optimizer state");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

Checkpoint to_checkpoint(NmtModel& model, std::uint64_t seed, std::uint64_t epoch) {
  Checkpoint c;
  c.variant = kTranslationModel;
  c.seed = seed;
  c.epoch = epoch;
  c.set_meta("nmt.src_vocab", std::to_string(model.config.src_vocab));
  c.set_meta("nmt.tgt_vocab", std::to_string(model.config.tgt_vocab));
  c.set_meta("nmt.emb", std::to_string(model.config.emb));
  c.set_meta("nmt.d_enc", std::to_string(model.config.d_enc));
  c.set_meta("nmt.d_dec", std::to_string(model.config.d_dec));
  store(c, model.parameters());
  return c;
}

NmtModel nmt_from_checkpoint(const Checkpoint& c) {
  if (c.variant != kTranslationModel) {
    throw FormatError("checkpoint variant: holds shared layers (" + std::to_string(c.variant) +
                      "), expected a translation model");
  }
  NmtConfig cfg{meta_size(c, "nmt.src_vocab"), meta_size(c, "nmt.tgt_vocab"), meta_size(c, "nmt.emb"),
                meta_size(c, "nmt.d_enc"), meta_size(c, "nmt.d_dec")};
  NmtModel m(cfg);
  restore(c, m.parameters());
  return m;
}

Checkpoint to_checkpoint(SharedStack& stack, std::uint64_t seed, std::uint64_t epoch) {
  Checkpoint c;
  c.variant = static_cast<std::uint32_t>(stack.config.variant);
  c.d_h = stack.config.d_h;
  c.r = stack.config.r;
  c.seed = seed;
  c.epoch = epoch;
  c.set_meta("shared.key_dim", std::to_string(stack.config.key_dim));
  store(c, stack.parameters());
  return c;
}

SharedStack shared_from_checkpoint(const Checkpoint& c, std::optional<Variant> expected) {
  if (c.variant != static_cast<std::uint32_t>(Variant::gru_sattn) &&
      c.variant != static_cast<std::uint32_t>(Variant::stacked_sattn)) {
    throw FormatError("checkpoint variant: " + std::to_string(c.variant) + " is not a shared-layer variant");
  }
  const auto variant = static_cast<Variant>(c.variant);
  if (expected && *expected != variant) {
    throw FormatError(std::string("checkpoint variant: holds ") + variant_name(variant) + ", run expects " +
                      variant_name(*expected));
  }
  SharedStack s({variant, static_cast<std::size_t>(c.d_h), static_cast<std::size_t>(c.r), meta_size(c, "shared.key_dim")});
  restore(c, s.parameters());
  return s;
}

}  // namespace xdv
