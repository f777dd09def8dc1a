// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/pack_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "clusterar/binary_io.hpp"

namespace clusterar {

namespace {
constexpr char kMagic[4] = {'C', 'P', 'A', 'K'};
}

void write_pack_dump(std::ostream& out, const PackedSequence& p) {
  BinaryWriter w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kPackDumpVersion);
  w.u32(p.num_images);
  w.u32(p.clusters_per_image);
  w.u32(p.cluster_side);
  w.u32(p.separator.embed_dim);
  w.u32(static_cast<std::uint32_t>(p.layout));
  w.u32(static_cast<std::uint32_t>(p.separator.value_kind));
  w.u32(p.grid_h);
  w.u32(p.grid_w);
  w.u32(p.patch_dim);
  w.u32(p.restart_positions ? 1 : 0);
  w.u32(p.tokens.size());
  for (const auto& t : p.tokens) {
    w.u8(t.meta.is_separator ? 1 : 0);
    w.u32(t.meta.image_index);
    w.u32(t.meta.cluster_index);
    w.u32(t.meta.within_cluster_index);
    w.u32(t.meta.position_id);
    w.i32(t.meta.source_cluster);
    w.i32(t.meta.patch_index);
    w.u32(t.values.size());
    w.f32s(t.values);
  }
  if (!out) throw std::runtime_error("write_pack_dump: stream error");
}

void write_pack_dump(const std::filesystem::path& path, const PackedSequence& packed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  write_pack_dump(out, packed);
}

PackedSequence read_pack_dump(std::istream& in) {
  BinaryReader r(in);
  char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw std::runtime_error("read_pack_dump: bad magic");
  if (const auto v = r.u32(); v != kPackDumpVersion) {
    throw std::runtime_error("read_pack_dump: unsupported version " + std::to_string(v));
  }
  PackedSequence p;
  p.num_images = r.u32();
  p.clusters_per_image = r.u32();
  p.cluster_side = r.u32();
  p.separator.embed_dim = r.u32();
  const auto layout = r.u32();
  const auto value = r.u32();
  if (layout > static_cast<std::uint32_t>(LayoutKind::None) || value > static_cast<std::uint32_t>(SeparatorValue::Identity)) {
    throw std::runtime_error("read_pack_dump: bad layout or separator kind");
  }
  p.layout = static_cast<LayoutKind>(layout);
  p.separator.value_kind = static_cast<SeparatorValue>(value);
  p.separator.cluster_rows = p.separator.cluster_cols = p.cluster_side;
  p.grid_h = r.u32();
  p.grid_w = r.u32();
  p.patch_dim = r.u32();
  p.restart_positions = r.u32() != 0;
  p.slots_per_image = layout_plan(p.layout, p.clusters_per_image, p.cluster_side).size();
  const auto count = r.u32();
  p.tokens.resize(count);
  for (auto& t : p.tokens) {
    t.meta.is_separator = r.u8() != 0;
    t.meta.image_index = r.u32();
    t.meta.cluster_index = r.u32();
    t.meta.within_cluster_index = r.u32();
    t.meta.position_id = r.u32();
    t.meta.source_cluster = r.i32();
    t.meta.patch_index = r.i32();
    t.values = r.f32s(r.u32());
  }
  for (const auto& t : p.tokens) {
    if (t.meta.is_separator && p.separator.value_kind == SeparatorValue::Embeddings) {
      p.separator.embedding = t.values;
      break;
    }
  }
  return p;
}

PackedSequence read_pack_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  return read_pack_dump(in);
}

}  // namespace clusterar
