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

#include "mtesim/cpu.h"

#include <algorithm>

#include "mtesim/short_granule.h"

namespace mtesim {

AccessDescriptor decode(const Instruction& instr, const RegisterFile& regs, size_t pc) {
  const uint64_t offset = instr.offset_kind == OffsetKind::Imm
                              ? static_cast<uint64_t>(instr.imm)
                              : regs[instr.offset_reg];
  const TaggedPointer effective{regs[instr.base] + offset};

  AccessDescriptor desc;
  desc.start = effective.address();
  desc.size = instr.access_size();
  desc.addrtag = effective.tag();
  desc.pc = pc;
  desc.is_store = instr.op == Opcode::Store;
  desc.canonical = effective.canonical();
  return desc;
}

std::optional<Fault> tag_check(const AccessDescriptor& desc, const TaggedMemory& mem,
                               const RegisterFile& regs) {
  auto make_fault = [&](uint64_t addr) {
    Fault f;
    f.pc = desc.pc;
    f.access_pc = desc.pc;
    f.fault_address = addr;
    f.regs = regs;
    f.access = desc;
    f.memtag = mem.get_granule_tag(addr);
    f.metadata = metadata_nibble(mem, addr);
    return f;
  };

  if (desc.size == 0) return std::nullopt;
  if (!desc.canonical) return make_fault(desc.start);
  const uint64_t last = desc.start + desc.size - 1;
  for (uint64_t g = granule_base(desc.start); g <= last; g += kGranuleSize) {
    if (mem.get_granule_tag(g) != desc.addrtag) return make_fault(std::max(desc.start, g));
  }
  return std::nullopt;
}

Machine::Machine(Program program, Mode mode) : program_(std::move(program)), mode_(mode) {
  regs_[kStackPointer] = kInitialStackPointer;
}

TrapResult Machine::set_trap(size_t pc) {
  if (pc >= program_.size()) return TrapResult::Unavailable;
  const Opcode op = program_[pc].op;
  if (op == Opcode::Ret || op == Opcode::Halt) return TrapResult::Unavailable;
  traps_.insert(pc);
  return TrapResult::Set;
}

}  // namespace mtesim
