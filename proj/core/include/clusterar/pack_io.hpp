// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "clusterar/separator.hpp"

namespace clusterar {

/// Packed-sequence dump, all integers little-endian uint32 unless noted:
///
///   magic "CPAK" | version | N | L | cluster_side | D | layout | value_kind
///   | grid_h | grid_w | patch_dim | restart_positions | token_count
///   token_count × { is_separator:u8 | image_index | cluster_index
///                   | within_cluster_index | position_id
///                   | source_cluster:i32 | patch_index:i32
///                   | value_count | value_count × float32 }
inline constexpr std::uint32_t kPackDumpVersion = 1;

void write_pack_dump(std::ostream& out, const PackedSequence& packed);
void write_pack_dump(const std::filesystem::path& path, const PackedSequence& packed);
PackedSequence read_pack_dump(std::istream& in);
PackedSequence read_pack_dump(const std::filesystem::path& path);

}  // namespace clusterar
