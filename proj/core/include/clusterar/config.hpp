// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clusterar {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { Int, Real, Bool, String };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string default_value;  // full preset
  std::string doc;
};

/// Every recognised key in registration order.
const std::vector<KeySpec>& config_keys();

/// Flat key/value run configuration. Unknown keys and ill-typed values
/// raise ConfigError.
class Config {
 public:
  /// Defaults of the named preset ("full" or "desk").
  static Config preset(std::string_view name);

  void set(const std::string& key, const std::string& value);
  [[nodiscard]] bool has(const std::string& key) const;

  [[nodiscard]] const std::string& str(const std::string& key) const;
  [[nodiscard]] long long integer(const std::string& key) const;
  [[nodiscard]] std::size_t count(const std::string& key) const;  // non-negative integer
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] bool boolean(const std::string& key) const;

  /// Sorted "key=value" lines; stable across runs.
  [[nodiscard]] std::string snapshot() const;

  /// Keys whose values differ between the two configurations.
  [[nodiscard]] std::vector<std::string> diff(const Config& other, const std::vector<std::string>& keys) const;

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Parses "key = value" lines; '#' starts a comment. Errors carry the line.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   const std::string& origin = "<config>");
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Splits "key=value".
std::pair<std::string, std::string> parse_assignment(std::string_view text);

/// Builds a configuration: preset first (the last `preset` assignment
/// wins), then `assignments` in order.
Config resolve_config(const std::vector<std::pair<std::string, std::string>>& assignments);

/// Text listing every key with its default, for --help.
std::string config_help();

/// Preset values that differ from the full defaults.
const std::vector<std::pair<std::string, std::string>>& desk_overrides();

}  // namespace clusterar
