// Copyright 2026 The mtesim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTESIM_RNG_H_
#define MTESIM_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace mtesim {

// Seeded generator for everything random in the simulator. Independent
// consumers (tag generation, tripwire sampling, corpus generation) each take a
// named substream so that changing how often one of them draws never shifts
// another's sequence.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  uint64_t seed() const { return seed_; }

  // Uniform integer in [lo, hi], inclusive.
  uint64_t uniform(uint64_t lo, uint64_t hi) {
    std::uniform_int_distribution<uint64_t> dist(lo, hi);
    return dist(engine_);
  }

  double uniform_real() {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

  Rng substream(std::string_view name) const { return Rng(derive(seed_, name)); }
  Rng substream(uint64_t index) const { return Rng(mix(seed_ ^ mix(index + 0x9e37))); }

  static uint64_t derive(uint64_t seed, std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return mix(seed ^ h);
  }

 private:
  // splitmix64 finalizer
  static uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mtesim

#endif  // MTESIM_RNG_H_
