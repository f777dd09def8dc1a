// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>

#include "clusterar/config.hpp"

namespace clusterar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct PackArgs {
  bool synthetic = false;
};

int cmd_gen(const Config& cfg, std::ostream& out);
int cmd_pack(const Config& cfg, const PackArgs& args, std::ostream& out);
int cmd_inspect(const Config& cfg, const std::string& dump, std::size_t max_tokens, std::ostream& out);
int cmd_inspect_mask(const Config& cfg, std::ostream& out);
int cmd_pretrain(const Config& cfg, std::ostream& out);
int cmd_finetune(const Config& cfg, std::ostream& out);
int cmd_verify(const Config& cfg, std::ostream& out);

}  // namespace clusterar::cli
