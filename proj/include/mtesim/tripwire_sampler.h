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

#ifndef MTESIM_TRIPWIRE_SAMPLER_H_
#define MTESIM_TRIPWIRE_SAMPLER_H_

#include <cstdint>
#include <limits>

#include "mtesim/rng.h"

namespace mtesim {

struct SamplerConfig {
  // Number of short-granule allocations that are always armed.
  uint64_t alloc_threshold = 1000;
  // After slow start, the gap between armed allocations is uniform in
  // [1, 2 * sampling_rate].
  uint64_t sampling_rate = 1000;

  static constexpr uint64_t kAlwaysArm = std::numeric_limits<uint64_t>::max();
};

// Decides, one short-granule allocation at a time, whether to arm a tripwire.
// Slow start arms everything; afterwards arming follows i.i.d. gaps.
class TripwireSampler {
 public:
  enum class Phase { SlowStart, Sampling };

  explicit TripwireSampler(SamplerConfig config = {});

  // Call exactly once per short-granule allocation, in allocation order.
  bool should_arm(Rng& rng);

  Phase phase() const { return phase_; }
  uint64_t alloc_count() const { return alloc_count_; }
  uint64_t countdown() const { return countdown_; }
  const SamplerConfig& config() const { return config_; }

 private:
  uint64_t draw_gap(Rng& rng) const;

  SamplerConfig config_;
  Phase phase_ = Phase::SlowStart;
  uint64_t alloc_count_ = 0;
  uint64_t countdown_ = 0;
};

}  // namespace mtesim

#endif  // MTESIM_TRIPWIRE_SAMPLER_H_
