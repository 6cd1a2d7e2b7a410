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

// Independent reference models used by the tests. They share no logic with
// the library: the bounds-check oracle enumerates bytes, and the provenance
// oracle tracks allocations symbolically instead of by address and tag.
#ifndef MTESIM_TESTS_ORACLES_H_
#define MTESIM_TESTS_ORACLES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "mtesim/isa.h"

namespace mtesim::oracle {

// Byte-set model of the tripwire check. The faulting granule begins at
// granule_start; its first `memtag` bytes are addressable when the pointer
// carries the stashed real tag. The access is benign iff every byte it touches
// at or beyond the granule start is one of those addressable bytes. Tag 0 is
// never a tripwire.
inline bool access_benign(uint64_t granule_start, uint64_t start, uint64_t size, unsigned addrtag,
                          unsigned memtag, unsigned metadata) {
  if (addrtag == 0 || memtag == 0) return false;
  if (addrtag != metadata) return false;
  for (uint64_t b = start; b < start + size; ++b) {
    if (b < granule_start) continue;  // earlier granules were checked by hardware
    const uint64_t index = b - granule_start;
    bool addressable = false;
    for (unsigned k = 0; k < memtag; ++k) addressable = addressable || index == k;
    if (!addressable) return false;
  }
  return true;
}

enum class Violation { None, OutOfBounds, UseAfterFree, DoubleFree, InvalidFree };

struct ProvenanceResult {
  Violation violation = Violation::None;
  size_t pc = 0;
  // For OutOfBounds: furthest byte offset touched relative to the allocation
  // base, and the allocation's requested size.
  int64_t access_end = 0;
  uint64_t alloc_size = 0;
  std::string detail;
};

// Interprets a program with exact allocation bounds. Registers hold either a
// plain value or (allocation, offset) provenance; the first access or free that
// leaves its allocation's exact bounds or lifetime is reported.
inline ProvenanceResult check_provenance(const Program& program) {
  struct Value {
    int64_t alloc = -1;  // -1: plain data
    int64_t offset = 0;
    uint64_t data = 0;
  };
  struct Alloc {
    uint64_t size;
    bool live;
  };
  Value regs[kNumRegs];
  std::map<int64_t, Alloc> allocs;
  int64_t next_id = 0;

  auto fail = [](Violation v, size_t pc, std::string detail) {
    ProvenanceResult r;
    r.violation = v;
    r.pc = pc;
    r.detail = std::move(detail);
    return r;
  };

  for (size_t pc = 0; pc < program.code.size(); ++pc) {
    const Instruction& in = program.code[pc];
    switch (in.op) {
      case Opcode::AllocCall:
        allocs[next_id] = Alloc{static_cast<uint64_t>(in.imm), true};
        regs[in.rt] = Value{next_id++, 0, 0};
        break;
      case Opcode::FreeCall: {
        const Value& p = regs[in.rt];
        if (p.alloc < 0 || p.offset != 0) return fail(Violation::InvalidFree, pc, "free of non-base");
        if (!allocs.at(p.alloc).live) return fail(Violation::DoubleFree, pc, "double free");
        allocs.at(p.alloc).live = false;
        break;
      }
      case Opcode::Mov:
        regs[in.rt] = Value{-1, 0, static_cast<uint64_t>(in.imm)};
        break;
      case Opcode::Add: {
        Value v = regs[in.ra];
        if (v.alloc >= 0) {
          v.offset += in.imm;
        } else {
          v.data += static_cast<uint64_t>(in.imm);
        }
        regs[in.rt] = v;
        break;
      }
      case Opcode::Load:
      case Opcode::Store: {
        const Value& base = regs[in.base];
        if (base.alloc < 0) return fail(Violation::OutOfBounds, pc, "access through non-pointer");
        int64_t offset = base.offset;
        if (in.offset_kind == OffsetKind::Imm) {
          offset += in.imm;
        } else {
          offset += static_cast<int64_t>(regs[in.offset_reg].data);
        }
        const int64_t end = offset + static_cast<int64_t>(in.width) * in.pair;
        const Alloc& a = allocs.at(base.alloc);
        if (!a.live) return fail(Violation::UseAfterFree, pc, "access to freed allocation");
        if (offset < 0 || end > static_cast<int64_t>(a.size)) {
          ProvenanceResult r = fail(Violation::OutOfBounds, pc, "access outside allocation");
          r.access_end = end;
          r.alloc_size = a.size;
          return r;
        }
        if (in.op == Opcode::Load) {
          for (unsigned i = 0; i < in.pair; ++i) regs[in.rt + i] = Value{};
        }
        break;
      }
      case Opcode::Syscall:
      case Opcode::Ret:
      case Opcode::Halt:
        break;
    }
  }
  return {};
}

}  // namespace mtesim::oracle

#endif  // MTESIM_TESTS_ORACLES_H_
