// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "clusterar/binary_io.hpp"

namespace clusterar {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'R', 'C', 'K', 'P', 'T'};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name, TensorRole role) const {
  for (const auto& t : tensors) {
    if (t.role == role && t.name == name) return &t;
  }
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out(std::ios::binary);
  BinaryWriter w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(ckpt.kind);
  w.u64(ckpt.step);
  w.u64(ckpt.total_steps);
  w.str(ckpt.config);
  w.u32(ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    w.str(t.name);
    w.u8(static_cast<std::uint8_t>(t.role));
    w.u32(t.value.rows);
    w.u32(t.value.cols);
    w.f32s(t.value.data);
  }
  std::string bytes = std::move(out).str();
  const std::uint32_t crc = crc_of(bytes.data(), bytes.size());
  bytes.append(reinterpret_cast<const char*>(&crc), sizeof crc);
  return bytes;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof stored);
  if (stored != crc_of(bytes.data(), body)) throw CheckpointError("checkpoint: checksum mismatch");

  std::istringstream in(bytes.substr(sizeof kMagic, body - sizeof kMagic), std::ios::binary);
  BinaryReader r(in);
  Checkpoint c;
  try {
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    }
    c.kind = r.str();
    c.step = r.u64();
    c.total_steps = r.u64();
    c.config = r.str();
    const auto n = r.u32();
    c.tensors.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      NamedTensor t;
      t.name = r.str(4096);
      const auto role = r.u8();
      if (role > static_cast<std::uint8_t>(TensorRole::Ema)) throw CheckpointError("checkpoint: bad tensor role");
      t.role = static_cast<TensorRole>(role);
      const auto rows = r.u32();
      const auto cols = r.u32();
      if (static_cast<std::uint64_t>(rows) * cols * sizeof(float) > bytes.size()) {
        throw CheckpointError("checkpoint: tensor " + t.name + " larger than the file");
      }
      t.value = Matrix<float>(rows, cols);
      t.value.data = r.f32s(static_cast<std::size_t>(rows) * cols);
      c.tensors.push_back(std::move(t));
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: truncated (") + e.what() + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot write " + tmp.string());
    const std::string bytes = encode_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace clusterar
