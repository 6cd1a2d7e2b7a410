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

#ifndef MTESIM_EXPERIMENTS_H_
#define MTESIM_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtesim/allocator.h"
#include "mtesim/report_json.h"
#include "mtesim/simulator.h"
#include "mtesim/trace_io.h"

namespace mtesim {

struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double p) const { return lo <= p && p <= hi; }
};

// Wilson score interval; z defaults to the two-sided 95% quantile.
Interval wilson_interval(uint64_t successes, uint64_t trials, double z = 1.959963984540054);

struct ExperimentResult {
  std::string name;
  uint64_t trials = 0;
  uint64_t detected = 0;
  double rate = 0;
  Interval wilson_95_ci;
  OrderedJson config_echo;
};

ExperimentResult make_result(std::string name, uint64_t detected, uint64_t trials,
                             OrderedJson config);
OrderedJson to_json(const ExperimentResult& result);

// Runs fn(0..n-1) across worker threads (0 = one per hardware thread). Each
// index must own its state; the first exception is rethrown after joining.
void parallel_for(uint64_t n, const std::function<void(uint64_t)>& fn, unsigned workers = 0);

// Per-trial simulator seed derived from the experiment seed.
uint64_t trial_seed(uint64_t seed, uint64_t trial);

// Generates `trials` programs of workload.kind and counts those whose bug is
// reported at the planted instruction.
ExperimentResult exp_detection_rate(WorkloadSpec workload, const SimConfig& config,
                                    uint64_t trials, uint64_t seed);

// Fraction of n drawn sizes that leave a short granule.
ExperimentResult exp_vulnerable_fraction(const std::vector<SizeWeight>& sizes, uint64_t n,
                                         uint64_t seed);

// Frequency with which two independent tag draws collide.
ExperimentResult exp_collision_rate(uint64_t trials, uint64_t seed, bool allow_zero_tag = false,
                                    TagMask exclude = 0);

struct SamplingResult {
  uint64_t sampling_rate = 0;
  uint64_t calls = 0;
  uint64_t arms = 0;
  double expected_arms = 0;
  double sigma = 0;

  bool within(double k_sigma) const;
};

// Arm count over `calls` post-slow-start sampler decisions.
SamplingResult exp_sampling_rate(uint64_t sampling_rate, uint64_t calls, uint64_t seed);

struct TransparencyResult {
  bool pass = true;
  uint64_t programs = 0;
  uint64_t failures = 0;
  std::string first_diff;
  std::string warning;
};

// Runs each program with tag checks off and again in Sync mode with every
// short granule armed, then compares final registers and data bytes. Padding
// bytes of short granules that carried a tripwire are ignored.
TransparencyResult exp_recovery_transparency(const std::vector<Program>& programs,
                                             const SimConfig& config);

}  // namespace mtesim

#endif  // MTESIM_EXPERIMENTS_H_
