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

#ifndef MTESIM_ISA_H_
#define MTESIM_ISA_H_

#include <cstdint>
#include <vector>

namespace mtesim {

inline constexpr unsigned kNumRegs = 32;
inline constexpr uint8_t kStackPointer = 31;

enum class Opcode : uint8_t { Load, Store, Mov, Add, AllocCall, FreeCall, Syscall, Ret, Halt };

enum class OffsetKind : uint8_t { Imm, Reg };

// One instruction of the trace ISA.
//
// Field use by opcode:
//   Load/Store  rt (data register), base, offset, width, pair, flags
//   Mov         rt <- imm
//   Add         rt <- ra + imm
//   AllocCall   rt <- allocate(imm)
//   FreeCall    free(rt)
//
// A pair access moves registers rt and rt+1 through consecutive `width`-byte
// slots. Registers are 64 bits wide: 16-byte slots store the register
// zero-extended and load its low 8 bytes.
struct Instruction {
  Opcode op = Opcode::Halt;
  uint8_t rt = 0;
  uint8_t base = 0;
  uint8_t ra = 0;
  OffsetKind offset_kind = OffsetKind::Imm;
  uint8_t offset_reg = 0;
  int64_t imm = 0;
  uint8_t width = 8;
  uint8_t pair = 1;
  bool atomic = false;
  bool overread_ok = false;

  bool is_memory() const { return op == Opcode::Load || op == Opcode::Store; }
  uint32_t access_size() const { return static_cast<uint32_t>(width) * pair; }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Program {
  std::vector<Instruction> code;
  // 1-based source line of each instruction; empty for built programs.
  std::vector<int> lines;

  size_t size() const { return code.size(); }
  const Instruction& operator[](size_t pc) const { return code[pc]; }

  // Programs compare by instruction sequence only.
  friend bool operator==(const Program& a, const Program& b) { return a.code == b.code; }
};

inline constexpr bool valid_width(unsigned w) {
  return w == 1 || w == 2 || w == 4 || w == 8 || w == 16;
}

}  // namespace mtesim

#endif  // MTESIM_ISA_H_
