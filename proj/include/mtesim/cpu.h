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

#ifndef MTESIM_CPU_H_
#define MTESIM_CPU_H_

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>

#include "mtesim/isa.h"
#include "mtesim/tagged_memory.h"

namespace mtesim {

enum class Mode { Off, Async, Sync };

using RegisterFile = std::array<uint64_t, kNumRegs>;

// A decoded memory access.
struct AccessDescriptor {
  uint64_t start = 0;  // untagged
  uint32_t size = 0;
  Tag addrtag = 0;
  size_t pc = 0;
  bool is_store = false;
  // Bits [63:60] of the effective pointer were zero.
  bool canonical = true;

  uint64_t end() const { return start + size; }
};

struct Fault {
  // Faulting instruction in Sync mode; the draining kernel-entry site once an
  // Async fault is surfaced.
  size_t pc = 0;
  size_t access_pc = 0;
  uint64_t fault_address = 0;
  RegisterFile regs{};
  AccessDescriptor access;
  // Granule state observed when the fault was raised.
  Tag memtag = 0;
  Tag metadata = 0;
};

// Effective address, size and address tag of a Load/Store. The tag comes from
// the 64-bit sum of base and offset, so an immediate offset keeps the base
// register's tag and a register offset contributes its own top byte.
AccessDescriptor decode(const Instruction& instr, const RegisterFile& regs, size_t pc);

// Checks every granule covering the access in ascending order and reports the
// first whose tag differs from the address tag. A non-canonical pointer faults
// at its first byte.
std::optional<Fault> tag_check(const AccessDescriptor& desc, const TaggedMemory& mem,
                               const RegisterFile& regs);

enum class TrapResult { Set, Unavailable };

// Architectural state of the trace machine.
class Machine {
 public:
  static constexpr uint64_t kInitialStackPointer = 0x7fff'0000;

  Machine(Program program, Mode mode);

  const Program& program() const { return program_; }
  Mode mode() const { return mode_; }

  RegisterFile& regs() { return regs_; }
  const RegisterFile& regs() const { return regs_; }
  size_t pc() const { return pc_; }
  void set_pc(size_t pc) { pc_ = pc; }

  // A trap fires before the instruction at `pc` executes. Ret and Halt slots
  // cannot hold one, and neither can a pc past the end of the program.
  TrapResult set_trap(size_t pc);
  void clear_trap(size_t pc) { traps_.erase(pc); }
  bool has_trap(size_t pc) const { return traps_.contains(pc); }
  size_t trap_count() const { return traps_.size(); }

  std::deque<Fault>& pending_async_faults() { return pending_; }

 private:
  Program program_;
  Mode mode_;
  RegisterFile regs_{};
  size_t pc_ = 0;
  std::set<size_t> traps_;
  std::deque<Fault> pending_;
};

}  // namespace mtesim

#endif  // MTESIM_CPU_H_
