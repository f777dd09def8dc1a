// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "clusterar/tensor.hpp"

namespace clusterar {

/// Checkpoint file, little-endian:
///
///   magic "CLARCKPT" (8 bytes) | version:u32 | kind:str | step:u64
///   | total_steps:u64 | config:str | tensor_count:u32
///   tensor_count × { name:str | role:u8 | rows:u32 | cols:u32 | rows*cols float32 }
///   | crc32:u32 over every preceding byte
///
/// str is a u32 length followed by the bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TensorRole : std::uint8_t { Param = 0, AdamM = 1, AdamV = 2, Ema = 3 };

struct NamedTensor {
  std::string name;
  TensorRole role = TensorRole::Param;
  Matrix<float> value;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::string kind;  // "pretrain" or "finetune"
  std::uint64_t step = 0;
  std::uint64_t total_steps = 0;
  std::string config;  // Config::snapshot()
  std::vector<NamedTensor> tensors;

  [[nodiscard]] const NamedTensor* find(const std::string& name, TensorRole role) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace clusterar
