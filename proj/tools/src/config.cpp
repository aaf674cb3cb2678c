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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace heatchain::cli {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool ParseNumber(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',' || c == ';' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

}  // namespace

const std::vector<KeySpec>& AllKeys() {
  static const std::vector<KeySpec> keys = {
      {"n_cells", "3", "number of cells N"},
      {"particles", "100", "particles per cell M"},
      {"t_left", "1", "left bath temperature T_L (> 0)"},
      {"t_right", "2", "right bath temperature T_R (> 0)"},
      {"rate_fn", "sqrt_product",
       "constant[:c] | sqrt_product | sqrt_harmonic | min_energy_sqrt | min_energy"},
      {"rate_cap", "auto", "upper cap on the rate; auto = 100 sqrt(max(T_L, T_R))"},
      {"seed", "42", "master seed"},
      {"t_end", "5", "final time (fast scale)"},
      {"dt", "0.001", "integrator step"},
      {"n_paths", "1000", "ensemble size"},
      {"m_list", "100,1000,10000", "list of M values"},
      {"delta_list", "0.2,0.1,0.05", "list of temperature gaps T_R - T_L"},
      {"tol", "1e-10", "equilibrium solver tolerance"},
      {"burn_in", "auto", "burn-in time; auto = 5 / |lambda_max|"},
      {"t_measure", "10000", "measurement window of a stationary run"},
      {"e0", "auto", "initial energies, comma separated; auto = every cell at T_L"},
      {"state", "", "energies at which moments are evaluated, comma separated"},
      {"epsilon", "0.3", "Beta tail exponent, in (0, 1/2)"},
      {"m_threshold", "0", "smallest M at which the Beta tail bound is asserted"},
      {"n_samples", "1000000", "Monte Carlo samples for the moment oracle (0 = skip)"},
      {"threads", "0", "worker threads; 0 = hardware concurrency"},
      {"grid_points", "101", "number of output times on [0, t_end]"},
      {"n_batches", "50", "batches for batch-means error bars"},
      {"event_cap", "10000000", "maximum number of logged events"},
      {"sde_dt", "0.00025", "Euler-Maruyama step of the mesoscopic equation"},
      {"proxy_m", "0", "large-M proxy for verify-meso (0 = off)"},
      {"proxy_paths", "1000", "ensemble size of the large-M proxy"},
      {"doubling", "false", "verify-ness: also run at 2M and check the variance ratio"},
      {"plot", "false", "also write a gnuplot script reading the CSVs"},
  };
  return keys;
}

const KeySpec* FindKey(const std::string& name) {
  for (const KeySpec& k : AllKeys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void Config::LoadText(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config error at " + where + ": expected key=value, got '" + line + "'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config error at " + where + ": empty key");
    if (!FindKey(key)) {
      throw ConfigError("config error: unknown key '" + key + "' at " + where);
    }
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError("config error: key '" + key + "' at " + where +
                        " repeats line " + std::to_string(it->second));
    }
    seen[key] = lineno;
    values_[key] = {value, where};
  }
}

void Config::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  LoadText(in);
}

void Config::Set(const std::string& key, const std::string& value, const std::string& origin) {
  if (!FindKey(key)) throw ConfigError("config error: unknown key '" + key + "' (" + origin + ")");
  values_[key] = {value, origin};
}

void Config::ApplyDefaults(const std::map<std::string, std::string>& overrides) {
  for (const KeySpec& k : AllKeys()) {
    if (values_.count(k.name)) continue;
    auto it = overrides.find(k.name);
    const std::string& v = it != overrides.end() ? it->second : k.default_value;
    if (!v.empty()) values_[k.name] = {v, "default"};
  }
}

bool Config::Has(const std::string& key) const { return values_.count(key) > 0; }

void Config::Fail(const std::string& key, const std::string& what) const {
  auto it = values_.find(key);
  const std::string where = it == values_.end() ? "" : " (" + it->second.origin + ")";
  throw ConfigError("config error: key '" + key + "'" + where + ": " + what);
}

const ConfigValue& Config::Raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config error: missing required key '" + key + "'");
  return it->second;
}

std::string Config::GetString(const std::string& key) const { return Raw(key).text; }

double Config::GetDouble(const std::string& key) const {
  double v = 0.0;
  if (!ParseNumber(Raw(key).text, v) || !std::isfinite(v)) {
    Fail(key, "cannot parse '" + Raw(key).text + "' as a number");
  }
  return v;
}

int Config::GetInt(const std::string& key) const {
  const std::string& t = Raw(key).text;
  long long v = 0;
  if (!ParseNumber(t, v)) {
    // Accept integral values written in floating notation, e.g. 1e4.
    double d = 0.0;
    if (!ParseNumber(t, d) || d != std::floor(d) || std::abs(d) > 2e9) {
      Fail(key, "cannot parse '" + t + "' as an integer");
    }
    v = static_cast<long long>(d);
  }
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    Fail(key, "value '" + t + "' out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t Config::GetUint64(const std::string& key) const {
  std::uint64_t v = 0;
  if (!ParseNumber(Raw(key).text, v)) {
    Fail(key, "cannot parse '" + Raw(key).text + "' as an unsigned integer");
  }
  return v;
}

bool Config::GetBool(const std::string& key) const {
  const std::string& t = Raw(key).text;
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  Fail(key, "cannot parse '" + t + "' as a boolean");
}

std::vector<double> Config::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : SplitList(Raw(key).text)) {
    double v = 0.0;
    if (!ParseNumber(item, v) || !std::isfinite(v)) {
      Fail(key, "cannot parse list entry '" + item + "' as a number");
    }
    out.push_back(v);
  }
  if (out.empty()) Fail(key, "empty list");
  return out;
}

std::vector<int> Config::GetIntList(const std::string& key) const {
  std::vector<int> out;
  for (double v : GetDoubleList(key)) {
    if (v != std::floor(v) || std::abs(v) > 2e9) {
      Fail(key, "list entry " + std::to_string(v) + " is not an integer");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

ChainConfig Config::Chain() const {
  ChainConfig cfg;
  cfg.n_cells = GetInt("n_cells");
  cfg.particles_per_cell = GetInt("particles");
  cfg.t_left = GetDouble("t_left");
  cfg.t_right = GetDouble("t_right");
  try {
    cfg.rate_fn = RateFunctionSpec::Parse(GetString("rate_fn"));
  } catch (const std::invalid_argument& e) {
    Fail("rate_fn", e.what());
  }
  cfg.master_seed = GetUint64("seed");
  if (GetString("rate_cap") == "auto") {
    cfg.rate_cap = 100.0 * std::sqrt(std::max({cfg.t_left, cfg.t_right, 0.0}));
  } else {
    cfg.rate_cap = GetDouble("rate_cap");
  }
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    // Validation messages start with the offending key.
    std::string msg = e.what();
    std::string key = msg.substr(0, msg.find(' '));
    if (!FindKey(key)) key = "rate_fn";
    Fail(key, msg);
  }
  return cfg;
}

std::optional<EnergyState> Config::State(const std::string& key, int n_cells) const {
  if (!Has(key) || GetString(key) == "auto") return std::nullopt;
  std::vector<double> v = GetDoubleList(key);
  if (static_cast<int>(v.size()) != n_cells) {
    Fail(key, "expected " + std::to_string(n_cells) + " entries, got " + std::to_string(v.size()));
  }
  try {
    return EnergyState(std::move(v));
  } catch (const std::invalid_argument& e) {
    Fail(key, e.what());
  }
}

}  // namespace heatchain::cli
