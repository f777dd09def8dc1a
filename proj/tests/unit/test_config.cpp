// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "clusterar/config.hpp"
#include "clusterar/model.hpp"
#include "oracles.hpp"

using namespace clusterar;

TEST_CASE("every key has a default that type-checks") {
  std::set<std::string> names;
  for (const auto& k : config_keys()) {
    CAPTURE(k.name);
    CHECK(names.insert(k.name).second);
    CHECK_FALSE(k.doc.empty());
  }
  const Config full = Config::preset("full");
  CHECK(full.values().size() == config_keys().size());
  const Config desk = Config::preset("desk");
  CHECK(desk.str("preset") == "desk");
  for (const auto& [key, value] : desk_overrides()) CHECK(desk.str(key) == value);
}

TEST_CASE("full preset geometry") {
  const Config c = Config::preset("full");
  const Geometry g = geometry_from(c);
  CHECK(g.grid() == 12);
  CHECK(g.clusters() == 9);
  CHECK(g.patch_dim() == 768);
  CHECK(c.integer("model.depth") == 14);
  CHECK(c.integer("decoder.layers") == 4);
  CHECK(c.integer("decoder.width") == 512);
}

TEST_CASE("unknown keys and ill-typed values are errors") {
  Config c = Config::preset("desk");
  CHECK_THROWS_WITH_AS(c.set("model.widht", "3"), doctest::Contains("model.widht"), ConfigError);
  CHECK_THROWS_AS(c.set("model.width", "wide"), ConfigError);
  CHECK_THROWS_AS(c.set("optim.beta1", "nan"), ConfigError);
  CHECK_THROWS_AS(c.set("train.shuffle", "maybe"), ConfigError);
  CHECK_THROWS_AS(Config::preset("huge"), ConfigError);
  c.set("model.width", "12");
  CHECK(c.count("model.width") == 12);
  c.set("seed", "-1");
  CHECK_THROWS_AS(static_cast<void>(c.count("seed")), ConfigError);
}

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\n  model.width = 32  \n\nseed=4 # trailing\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"model.width", "32"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"seed", "4"});
  CHECK_THROWS_WITH_AS(parse_config_text("a = 1\nnot an assignment\n", "f.cfg"), doctest::Contains("f.cfg:2"),
                       ConfigError);
  CHECK(parse_assignment("a.b=c=d") == std::pair<std::string, std::string>{"a.b", "c=d"});
  CHECK_THROWS_AS(parse_assignment("novalue"), ConfigError);
}

TEST_CASE("resolve: preset first, later assignments win") {
  const Config c = resolve_config({{"model.width", "24"}, {"preset", "desk"}, {"model.width", "40"}});
  CHECK(c.str("preset") == "desk");
  CHECK(c.integer("model.width") == 40);
  CHECK(c.integer("geometry.image_size") == 16);
  const Config d = resolve_config({{"model.depth", "3"}, {"preset", "desk"}});
  CHECK(d.integer("model.depth") == 3);
}

TEST_CASE("config file round trip through a snapshot") {
  oracle::TempDir dir("config");
  Config c = Config::preset("desk");
  c.set("model.width", "48");
  c.set("paths.out", "some dir");
  std::ofstream(dir / "run.cfg") << c.snapshot();
  const Config back = resolve_config(read_config_file(dir / "run.cfg"));
  CHECK(back.snapshot() == c.snapshot());
  CHECK(back.diff(c, {"model.width", "paths.out"}).empty());
  CHECK_THROWS_AS(read_config_file(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("diff names differing keys") {
  Config a = Config::preset("desk"), b = Config::preset("desk");
  b.set("model.depth", "9");
  CHECK(a.diff(b, architecture_keys()) == std::vector<std::string>{"model.depth"});
}

TEST_CASE("help lists every key") {
  const std::string help = config_help();
  for (const auto& k : config_keys()) CHECK(help.find(k.name) != std::string::npos);
}

TEST_CASE("docs/config.md documents every key") {
  const char* path = std::getenv("CLUSTERAR_DOCS_CONFIG");
  if (path == nullptr) {
    MESSAGE("CLUSTERAR_DOCS_CONFIG not set; skipping");
    return;
  }
  const std::string doc = oracle::slurp(path);
  REQUIRE_FALSE(doc.empty());
  for (const auto& k : config_keys()) {
    CAPTURE(k.name);
    CHECK(doc.find("`" + k.name + "`") != std::string::npos);
  }
}

TEST_CASE("typed views reject inconsistent geometry") {
  Config c = Config::preset("desk");
  c.set("geometry.image_size", "18");
  CHECK_THROWS_AS(geometry_from(c), ConfigError);
  c = Config::preset("desk");
  c.set("separator.layout", "SCS");
  c.set("geometry.image_size", "24");  // 6x6 grid -> 9 clusters of side 2
  CHECK_THROWS_AS(static_cast<void>(layout_from(c)), ConfigError);
  c.set("geometry.image_size", "32");
  CHECK(layout_from(c) == LayoutKind::SCS);
  c.set("separator.layout", "none");
  CHECK_THROWS_AS(static_cast<void>(layout_from(c)), ConfigError);
  c = Config::preset("desk");
  c.set("decoder.heads", "5");
  CHECK_THROWS_AS(decoder_config_from(c), ConfigError);
}
