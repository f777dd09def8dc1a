// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "clusterar/verify.hpp"

using namespace clusterar;

TEST_CASE("property suite passes and names its checks") {
  const auto results = run_verify({});
  CHECK(results.size() >= 5);
  std::set<std::string> names;
  for (const auto& r : results) {
    CAPTURE(format_check(r));
    CHECK(r.pass);
    CHECK(names.insert(r.name).second);
  }
  for (const char* expected : {"scan_kernel", "causality", "mask_oracle", "gradient", "normalization"}) {
    CAPTURE(expected);
    CHECK(std::any_of(names.begin(), names.end(),
                      [&](const std::string& n) { return n.find(expected) != std::string::npos; }));
  }
}

TEST_CASE("corrupted mask rule is caught") {
  const auto results = run_verify({0, true});
  const auto mask = std::find_if(results.begin(), results.end(), [](const auto& r) { return r.name == "mask_oracle"; });
  REQUIRE(mask != results.end());
  CHECK_FALSE(mask->pass);
  CHECK(format_check(*mask).rfind("FAIL", 0) == 0);
}

TEST_CASE("report lines carry the instance seed") {
  const auto r = run_verify({42, false});
  REQUIRE_FALSE(r.empty());
  const auto scan = std::find_if(r.begin(), r.end(), [](const auto& c) { return c.name == "scan_kernel_equivalence"; });
  REQUIRE(scan != r.end());
  CHECK(scan->seed == 42);
  CHECK(format_check(*scan).find("(seed 42)") != std::string::npos);
}
