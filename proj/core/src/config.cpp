// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace clusterar {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "off" || v == "no") {
    out = false;
    return true;
  }
  return false;
}

bool parse_int(std::string_view v, long long& out) {
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_real(const std::string& v, double& out) {
  if (v.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == v.size() && std::isfinite(out);
}

void check_value(const KeySpec& spec, const std::string& value) {
  bool b = false;
  long long i = 0;
  double r = 0.0;
  bool ok = true;
  switch (spec.type) {
    case KeyType::Int: ok = parse_int(value, i); break;
    case KeyType::Real: ok = parse_real(value, r); break;
    case KeyType::Bool: ok = parse_bool(value, b); break;
    case KeyType::String: break;
  }
  if (!ok) throw ConfigError("config: invalid value '" + value + "' for " + spec.name);
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  using K = KeyType;
  static const std::vector<KeySpec> keys = {
      {"preset", K::String, "full", "base defaults: full or desk"},
      {"seed", K::Int, "0", "master seed for data, init, and sampling"},
      {"geometry.image_size", K::Int, "192", "square image side in pixels"},
      {"geometry.channels", K::Int, "3", "image channels"},
      {"geometry.patch_size", K::Int, "16", "patch side in pixels"},
      {"geometry.cluster_side", K::Int, "4", "patches per cluster edge"},
      {"separator.value", K::String, "identity", "zeros, ones, embeddings, or identity"},
      {"separator.layout", K::String, "SC", "SC, CS, SCS, or CSC"},
      {"separator.images", K::Int, "8", "images packed per sequence"},
      {"separator.restart_positions", K::Bool, "true", "restart position ids in every image"},
      {"model.width", K::Int, "768", "encoder width D"},
      {"model.depth", K::Int, "14", "MambaMLP blocks"},
      {"model.state_dim", K::Int, "16", "SSM state size per channel"},
      {"model.mlp_ratio", K::Int, "4", "MLP hidden width over D"},
      {"model.scan_mode", K::String, "one", "pretraining scan: one or four"},
      {"model.sum_paths", K::Bool, "true", "four-scan: sum path outputs (false averages)"},
      {"decoder.layers", K::Int, "4", "decoder layers"},
      {"decoder.width", K::Int, "512", "decoder width"},
      {"decoder.heads", K::Int, "8", "attention heads"},
      {"decoder.self_attention", K::Bool, "true", "masked self-attention sublayer"},
      {"objective.include_separator_targets", K::Bool, "true", "train on separator targets"},
      {"optim.batch_size", K::Int, "2048", "packed sequences per step"},
      {"optim.lr_per_256", K::Real, "0.00015", "lr = lr_per_256 * batch_size / 256"},
      {"optim.weight_decay", K::Real, "0.05", "decoupled weight decay"},
      {"optim.beta1", K::Real, "0.9", "AdamW beta1"},
      {"optim.beta2", K::Real, "0.95", "AdamW beta2"},
      {"optim.warmup_epochs", K::Real, "40", "linear warmup length"},
      {"optim.epochs", K::Real, "200", "pretraining length"},
      {"optim.max_steps", K::Int, "0", "stop after this many steps (0: no cap)"},
      {"finetune.batch_size", K::Int, "1024", "images per step"},
      {"finetune.lr_per_256", K::Real, "0.0005", "lr = lr_per_256 * batch_size / 256"},
      {"finetune.weight_decay", K::Real, "0.05", "decoupled weight decay"},
      {"finetune.beta1", K::Real, "0.9", "AdamW beta1"},
      {"finetune.beta2", K::Real, "0.999", "AdamW beta2"},
      {"finetune.layer_decay", K::Real, "0.65", "layer-wise lr decay"},
      {"finetune.drop_path", K::Real, "0.1", "stochastic depth rate at the last block"},
      {"finetune.warmup_epochs", K::Real, "5", "linear warmup length"},
      {"finetune.epochs", K::Real, "100", "fine-tuning length"},
      {"finetune.max_steps", K::Int, "0", "stop after this many steps (0: no cap)"},
      {"finetune.class_token", K::String, "tail", "class token position: tail or middle"},
      {"finetune.ema_decay", K::Real, "0.9999", "EMA decay of evaluated weights"},
      {"finetune.checkpoint", K::String, "", "pretrained checkpoint (empty: random init)"},
      {"train.shuffle", K::Bool, "true", "reshuffle images every epoch"},
      {"train.resume", K::String, "", "checkpoint to resume from"},
      {"aug.flip", K::Bool, "true", "random horizontal flip"},
      {"aug.crop_pad", K::Int, "16", "random crop after edge padding by this many pixels"},
      {"data.classes", K::Int, "4", "synthetic shape classes"},
      {"data.count", K::Int, "256", "synthetic images to generate"},
      {"paths.corpus", K::String, "corpus", "training corpus directory"},
      {"paths.eval_corpus", K::String, "", "held-out corpus directory for fine-tune evaluation"},
      {"paths.out", K::String, "run", "output directory"},
      {"paths.pack_out", K::String, "pack.bin", "packed dump written by pack"},
      {"checkpoint.every", K::Int, "0", "checkpoint period in steps (0: final only)"},
      {"log.wall_clock", K::Bool, "false", "record wall time in metrics (breaks byte equality)"},
      {"verify.corrupt_mask", K::Bool, "false", "negative control: verify against a wrong mask rule"},
  };
  return keys;
}

const std::vector<std::pair<std::string, std::string>>& desk_overrides() {
  static const std::vector<std::pair<std::string, std::string>> v = {
      {"geometry.image_size", "16"},  {"geometry.patch_size", "4"},   {"geometry.cluster_side", "2"},
      {"separator.images", "2"},      {"model.width", "64"},          {"model.depth", "4"},
      {"model.state_dim", "8"},       {"decoder.layers", "2"},        {"decoder.width", "64"},
      {"decoder.heads", "4"},         {"optim.batch_size", "8"},      {"optim.lr_per_256", "0.064"},
      {"optim.warmup_epochs", "1"},   {"optim.epochs", "40"},         {"finetune.batch_size", "16"},
      {"finetune.lr_per_256", "0.032"}, {"finetune.warmup_epochs", "1"}, {"finetune.epochs", "20"},
      {"finetune.ema_decay", "0.99"}, {"aug.crop_pad", "2"},          {"data.count", "64"},
  };
  return v;
}

Config Config::preset(std::string_view name) {
  Config c;
  for (const auto& k : config_keys()) c.values_[k.name] = k.default_value;
  if (name == "full") return c;
  if (name != "desk") throw ConfigError("config: unknown preset '" + std::string(name) + "' (full, desk)");
  for (const auto& [k, v] : desk_overrides()) c.values_[k] = v;
  c.values_["preset"] = "desk";
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError("config: unknown key '" + key + "'");
  check_value(*spec, value);
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
  return it->second;
}

long long Config::integer(const std::string& key) const {
  long long v = 0;
  if (!parse_int(str(key), v)) throw ConfigError("config: " + key + " is not an integer");
  return v;
}

std::size_t Config::count(const std::string& key) const {
  const long long v = integer(key);
  if (v < 0) throw ConfigError("config: " + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

double Config::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(str(key), v)) throw ConfigError("config: " + key + " is not a number");
  return v;
}

bool Config::boolean(const std::string& key) const {
  bool v = false;
  if (!parse_bool(str(key), v)) throw ConfigError("config: " + key + " is not a boolean");
  return v;
}

std::string Config::snapshot() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::vector<std::string> Config::diff(const Config& other, const std::vector<std::string>& keys) const {
  std::vector<std::string> out;
  for (const auto& k : keys) {
    const auto a = values_.find(k);
    const auto b = other.values_.find(k);
    const bool a_has = a != values_.end();
    const bool b_has = b != other.values_.end();
    if (a_has != b_has || (a_has && a->second != b->second)) out.push_back(k);
  }
  return out;
}

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("config: expected key=value, got '" + std::string(text) + "'");
  auto key = trim(text.substr(0, eq));
  auto value = trim(text.substr(eq + 1));
  if (key.empty()) throw ConfigError("config: empty key in '" + std::string(text) + "'");
  return {std::move(key), std::move(value)};
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_assignment(line));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

Config resolve_config(const std::vector<std::pair<std::string, std::string>>& assignments) {
  std::string preset = "full";
  for (const auto& [k, v] : assignments) {
    if (k == "preset") preset = v;
  }
  Config c = Config::preset(preset);
  for (const auto& [k, v] : assignments) {
    if (k != "preset") c.set(k, v);
  }
  return c;
}

std::string config_help() {
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.name.size() + k.default_value.size() + 3);
  std::string out = "Configuration keys (full preset defaults; --set key=value):\n";
  for (const auto& k : config_keys()) {
    std::string head = "  " + k.name + " = " + (k.default_value.empty() ? "\"\"" : k.default_value);
    head.resize(std::max(head.size(), width + 4), ' ');
    out += head + "  " + k.doc + "\n";
  }
  out += "Preset desk overrides:\n";
  for (const auto& [k, v] : desk_overrides()) out += "  " + k + " = " + v + "\n";
  return out;
}

}  // namespace clusterar
