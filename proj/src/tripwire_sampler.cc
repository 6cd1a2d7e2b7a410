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

#include "mtesim/tripwire_sampler.h"

#include <stdexcept>

namespace mtesim {

TripwireSampler::TripwireSampler(SamplerConfig config) : config_(config) {
  if (config_.sampling_rate == 0) {
    throw std::invalid_argument("sampling_rate must be at least 1");
  }
}

uint64_t TripwireSampler::draw_gap(Rng& rng) const {
  return rng.uniform(1, 2 * config_.sampling_rate);
}

bool TripwireSampler::should_arm(Rng& rng) {
  if (phase_ == Phase::SlowStart) {
    if (alloc_count_ < config_.alloc_threshold) {
      ++alloc_count_;
      return true;
    }
    // This call is the first one past the threshold, so it already belongs to
    // the sampling phase.
    phase_ = Phase::Sampling;
    countdown_ = draw_gap(rng);
  }
  if (--countdown_ == 0) {
    countdown_ = draw_gap(rng);
    return true;
  }
  return false;
}

}  // namespace mtesim
