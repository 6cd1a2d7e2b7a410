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

#include "mtesim/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace mtesim {

Interval wilson_interval(uint64_t successes, uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  // The exact interval always contains p; clamp away rounding error.
  return {std::clamp(centre - half, 0.0, p), std::clamp(centre + half, p, 1.0)};
}

ExperimentResult make_result(std::string name, uint64_t detected, uint64_t trials,
                             OrderedJson config) {
  ExperimentResult r;
  r.name = std::move(name);
  r.trials = trials;
  r.detected = detected;
  r.rate = trials ? static_cast<double>(detected) / static_cast<double>(trials) : 0.0;
  r.wilson_95_ci = wilson_interval(detected, trials);
  r.config_echo = std::move(config);
  return r;
}

OrderedJson to_json(const ExperimentResult& r) {
  OrderedJson j;
  j["name"] = r.name;
  j["trials"] = r.trials;
  j["detected"] = r.detected;
  j["rate"] = r.rate;
  j["wilson_95_ci"] = {r.wilson_95_ci.lo, r.wilson_95_ci.hi};
  j["config_echo"] = r.config_echo;
  return j;
}

void parallel_for(uint64_t n, const std::function<void(uint64_t)>& fn, unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<uint64_t>(workers, n));
  if (workers <= 1) {
    for (uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (uint64_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

uint64_t trial_seed(uint64_t seed, uint64_t trial) {
  return Rng(Rng::derive(seed, "trial")).substream(trial).seed();
}

ExperimentResult exp_detection_rate(WorkloadSpec workload, const SimConfig& config,
                                    uint64_t trials, uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("detection experiments need at least 100 trials");
  workload.count = trials;
  workload.seed = seed;
  const std::vector<GeneratedProgram> programs = generate_workload(workload);

  std::vector<char> hit(trials, 0);
  parallel_for(trials, [&](uint64_t i) {
    SimConfig c = config;
    c.seed = trial_seed(seed, i);
    const RunReport report = run_program(programs[i].program, c);
    hit[i] = report.bug && programs[i].bug_pc && report.bug->pc == *programs[i].bug_pc;
  });
  const uint64_t detected = static_cast<uint64_t>(std::count(hit.begin(), hit.end(), 1));

  OrderedJson echo = to_json(config);
  echo.erase("seed");
  echo["seed"] = seed;
  echo["kind"] = std::string(to_string(workload.kind));
  echo["sizes"] = render_size_distribution(workload.sizes);
  echo["placement"] = workload.placement == CrossPlacement::Adjacent ? "adjacent" : "distant";
  echo["reuse_cycles"] = workload.reuse_cycles;
  return make_result("detection_rate", detected, trials, echo);
}

ExperimentResult exp_vulnerable_fraction(const std::vector<SizeWeight>& sizes, uint64_t n,
                                         uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (sizes.empty()) throw std::invalid_argument("size distribution is empty");
  std::vector<double> weights;
  for (const auto& s : sizes) weights.push_back(s.weight);
  std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
  std::mt19937_64 engine(Rng::derive(seed, "sizes"));
  uint64_t short_count = 0;
  for (uint64_t i = 0; i < n; ++i) {
    if (sizes[pick(engine)].size % kGranuleSize != 0) ++short_count;
  }
  OrderedJson echo;
  echo["seed"] = seed;
  echo["distinct_sizes"] = sizes.size();
  return make_result("vulnerable_fraction", short_count, n, echo);
}

ExperimentResult exp_collision_rate(uint64_t trials, uint64_t seed, bool allow_zero_tag,
                                    TagMask exclude) {
  if (trials < 1000) throw std::invalid_argument("collision experiments need at least 1000 trials");
  Rng rng = Rng(seed).substream("collision");
  uint64_t collisions = 0;
  for (uint64_t i = 0; i < trials; ++i) {
    const Tag a = generate_tag(exclude, rng, allow_zero_tag);
    const Tag b = generate_tag(exclude, rng, allow_zero_tag);
    collisions += a == b;
  }
  OrderedJson echo;
  echo["seed"] = seed;
  echo["allow_zero_tag"] = allow_zero_tag;
  echo["exclude_mask"] = exclude;
  return make_result("collision_rate", collisions, trials, echo);
}

bool SamplingResult::within(double k_sigma) const {
  return std::abs(static_cast<double>(arms) - expected_arms) <= k_sigma * sigma;
}

SamplingResult exp_sampling_rate(uint64_t sampling_rate, uint64_t calls, uint64_t seed) {
  SamplerConfig config;
  config.alloc_threshold = 0;
  config.sampling_rate = sampling_rate;
  TripwireSampler sampler(config);
  Rng rng = Rng(seed).substream("sampler");
  SamplingResult r;
  r.sampling_rate = sampling_rate;
  r.calls = calls;
  for (uint64_t i = 0; i < calls; ++i) r.arms += sampler.should_arm(rng);
  // Mean gap of a uniform draw on [1, 2R] is (1 + 2R) / 2.
  const double p = 2.0 / (1.0 + 2.0 * static_cast<double>(sampling_rate));
  r.expected_arms = static_cast<double>(calls) * p;
  r.sigma = std::sqrt(static_cast<double>(calls) * p * (1 - p));
  return r;
}

TransparencyResult exp_recovery_transparency(const std::vector<Program>& programs,
                                             const SimConfig& config) {
  TransparencyResult result;
  result.programs = programs.size();
  if (programs.empty()) {
    result.warning = "empty corpus: nothing compared";
    return result;
  }

  std::vector<std::string> diffs(programs.size());
  parallel_for(programs.size(), [&](uint64_t i) {
    SimConfig off = config;
    off.mode = Mode::Off;
    SimConfig sync = config;
    sync.mode = Mode::Sync;
    sync.detector.tripwires_enabled = true;
    sync.sampler.alloc_threshold = SamplerConfig::kAlwaysArm;

    Simulator a(programs[i], off);
    Simulator b(programs[i], sync);
    const RunReport ra = a.run();
    const RunReport rb = b.run();
    std::ostringstream why;
    if (ra.bug || rb.bug) {
      why << "program " << i << ": unexpected bug report at pc "
          << (ra.bug ? ra.bug->pc : rb.bug->pc);
      diffs[i] = why.str();
      return;
    }
    for (unsigned r = 0; r < kNumRegs; ++r) {
      if (a.machine().regs()[r] != b.machine().regs()[r]) {
        why << "program " << i << ": register r" << r << " differs (" << hex64(a.machine().regs()[r])
            << " vs " << hex64(b.machine().regs()[r]) << ")";
        diffs[i] = why.str();
        return;
      }
    }
    std::unordered_set<uint64_t> ignored;
    for (const AllocationRecord& rec : b.allocator().records()) {
      if (rec.tripwire == TripwireState::None) continue;
      for (uint64_t x = rec.base + rec.requested_size; x < rec.end(); ++x) ignored.insert(x);
    }
    for (uint64_t addr : TaggedMemory::diff_data(a.memory(), b.memory())) {
      if (ignored.contains(addr)) continue;
      why << "program " << i << ": data byte at " << hex64(addr) << " differs";
      diffs[i] = why.str();
      return;
    }
  });

  for (const std::string& d : diffs) {
    if (d.empty()) continue;
    if (result.failures++ == 0) result.first_diff = d;
  }
  result.pass = result.failures == 0;
  return result;
}

}  // namespace mtesim
