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

// Seeded random streams. Every stochastic result in the library is a pure
// function of a 64-bit seed: the engine is std::mt19937_64 (period
// 2^19937 - 1) and per-path seeds come from DeriveSeed.

#ifndef HEATCHAIN_RANDOM_HPP_
#define HEATCHAIN_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatchain {

// SplitMix64 finalizer applied to master + (index + 1) * 0x9E3779B97F4A7C15.
// Stable across releases; recorded in every run manifest.
constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr const char* kSeedRule =
    "path_seed = splitmix64_finalize(master_seed + (path_index + 1) * "
    "0x9E3779B97F4A7C15); engine = std::mt19937_64(path_seed)";

// Uniform variates strictly inside (0, 1) from the top 53 bits of the engine.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Plays back a fixed list of uniforms; used to replay events exactly.
class ReplayStream {
 public:
  explicit ReplayStream(std::vector<double> values) : values_(std::move(values)) {}

  double next() {
    if (pos_ >= values_.size()) throw std::out_of_range("replay stream exhausted");
    return values_[pos_++];
  }

  std::size_t consumed() const { return pos_; }

 private:
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

// Wraps a stream and records every uniform it hands out.
template <class Stream>
class RecordingStream {
 public:
  explicit RecordingStream(Stream& inner) : inner_(inner) {}

  double next() {
    double u = inner_.next();
    log_.push_back(u);
    return u;
  }

  const std::vector<double>& log() const { return log_; }

 private:
  Stream& inner_;
  std::vector<double> log_;
};

}  // namespace heatchain

#endif  // HEATCHAIN_RANDOM_HPP_
