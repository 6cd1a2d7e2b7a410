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

#ifndef MTESIM_SIMULATOR_H_
#define MTESIM_SIMULATOR_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "mtesim/allocator.h"
#include "mtesim/cpu.h"
#include "mtesim/detector.h"
#include "mtesim/isa.h"
#include "mtesim/tagged_memory.h"
#include "mtesim/tripwire_sampler.h"

namespace mtesim {

struct SimConfig {
  Mode mode = Mode::Sync;
  uint64_t seed = 0;
  AllocatorConfig allocator;
  SamplerConfig sampler;
  // detector.tripwires_enabled is the master switch; tripwires are armed only
  // in Sync mode because recovery needs precise faults.
  DetectorConfig detector;

  bool tripwires_active() const { return detector.tripwires_enabled && mode == Mode::Sync; }
};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct RunCounters {
  uint64_t instructions_executed = 0;
  uint64_t faults_delivered = 0;
  uint64_t traps_delivered = 0;
  uint64_t tripwires_armed = 0;
  uint64_t tripwires_removed_by_threshold = 0;
  uint64_t tripwires_removed_by_ret_edge = 0;
  uint64_t allocations = 0;
  uint64_t frees = 0;
};

struct RunReport {
  enum class Outcome { CleanHalt, BugReported };
  Outcome outcome = Outcome::CleanHalt;
  std::optional<BugReport> bug;
  RunCounters counters;
  SimConfig config;
};

enum class StepOutcome { Continue, Halted, BugReported };

// A program plus the machine, memory, allocator and detector executing it.
// Not copyable or movable: the allocator refers to the memory member.
class Simulator {
 public:
  using FaultObserver = std::function<void(const Fault&, const TaggedMemory&)>;

  Simulator(Program program, const SimConfig& config);
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  StepOutcome step();
  RunReport run();

  // Called with every Sync fault before the detector sees it.
  void set_fault_observer(FaultObserver observer) { observer_ = std::move(observer); }

  const TaggedMemory& memory() const { return memory_; }
  TaggedMemory& memory() { return memory_; }
  const Allocator& allocator() const { return allocator_; }
  const Detector& detector() const { return detector_; }
  const Machine& machine() const { return machine_; }
  Machine& machine() { return machine_; }
  RunCounters counters() const;
  const std::optional<BugReport>& bug() const { return bug_; }
  bool halted() const { return halted_; }

 private:
  StepOutcome execute_memory(const Instruction& instr);
  void perform_access(const Instruction& instr, const AccessDescriptor& desc);
  StepOutcome drain_async(size_t pc);
  StepOutcome report(BugReport bug);

  SimConfig config_;
  TaggedMemory memory_;
  Allocator allocator_;
  Detector detector_;
  Machine machine_;
  RunCounters counters_;
  std::optional<BugReport> bug_;
  bool halted_ = false;
  FaultObserver observer_;
};

RunReport run_program(const Program& program, const SimConfig& config);

}  // namespace mtesim

#endif  // MTESIM_SIMULATOR_H_
