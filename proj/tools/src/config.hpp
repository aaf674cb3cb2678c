//
// Copyright 2026 The heatchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Flat key=value run configuration. '#' starts a comment, blank lines are
// ignored, whitespace around keys and values is trimmed. Values from the
// command line override values from a file, which override defaults.

#ifndef HEATCHAIN_TOOLS_CONFIG_HPP_
#define HEATCHAIN_TOOLS_CONFIG_HPP_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatchain/model.hpp"

namespace heatchain::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::string default_value;  // empty: no default
  std::string help;
};

// Every key the tool understands.
const std::vector<KeySpec>& AllKeys();
const KeySpec* FindKey(const std::string& name);

struct ConfigValue {
  std::string text;
  std::string origin;  // "line 3", "command line" or "default"
};

class Config {
 public:
  // Parses file contents; unknown keys, malformed lines and duplicates
  // throw ConfigError naming the key and line.
  void LoadText(std::istream& in);
  void LoadFile(const std::string& path);
  void Set(const std::string& key, const std::string& value, const std::string& origin);
  // Fills every unset key from defaults (subcommand-specific first).
  void ApplyDefaults(const std::map<std::string, std::string>& overrides);

  bool Has(const std::string& key) const;
  const ConfigValue& Raw(const std::string& key) const;  // ConfigError if missing
  std::string GetString(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  int GetInt(const std::string& key) const;
  std::uint64_t GetUint64(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key) const;
  std::vector<int> GetIntList(const std::string& key) const;

  // Chain parameters; rate_cap "auto" resolves to 100 sqrt(max(T_L, T_R)).
  ChainConfig Chain() const;
  // Optional energy vector key (e0, state); "auto" or unset gives nullopt.
  std::optional<EnergyState> State(const std::string& key, int n_cells) const;

  // Error naming a key and where its value came from.
  [[noreturn]] void Fail(const std::string& key, const std::string& what) const;

  const std::map<std::string, ConfigValue>& values() const { return values_; }

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace heatchain::cli

#endif  // HEATCHAIN_TOOLS_CONFIG_HPP_
