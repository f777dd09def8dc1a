// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clusterar/config.hpp"

namespace clusterar {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  std::uint64_t seed = 0;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  /// Negative control: the mask under test follows a strict "<" rule.
  bool corrupt_mask = false;
};

/// Small pretraining configuration used by the gradient check: desk
/// geometry, D = 8, depth 2, one decoder layer, two images per sequence.
Config micro_config();

/// Runs the property suite; one result per named check.
std::vector<CheckResult> run_verify(const VerifyOptions& options);

std::string format_check(const CheckResult& r);

}  // namespace clusterar
