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

#ifndef MTESIM_TRACE_IO_H_
#define MTESIM_TRACE_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtesim/isa.h"

namespace mtesim {

class TraceError : public std::runtime_error {
 public:
  TraceError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class WorkloadSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Text trace format, one instruction per line, '#' starts a comment outside
// brackets:
//
//   alloc r<d> <size>        free r<s>
//   mov r<d> <imm>           add r<d> r<a> <imm>
//   ld r<d> [r<b>, #<imm>|r<i>] w<1|2|4|8|16> p<1|2> [atomic] [overread_ok]
//   st r<s> [r<b>, #<imm>|r<i>] w<...> p<...> [...]
//   syscall | ret | halt
//
// `sp` is accepted for r31. The last instruction must be `halt`.
Program parse_program(std::string_view text);
Program read_program_file(const std::filesystem::path& path);

std::string render_instruction(const Instruction& instr);
// Canonical text: parse_program(render_program(p)) == p.
std::string render_program(const Program& program);

enum class WorkloadKind { IntraGranuleOverflow, CrossGranuleOverflow, UseAfterFree, DoubleFree, Benign };

std::string_view to_string(WorkloadKind kind);
// Accepts the full names and the short CLI names (intra, cross, uaf, double-free, benign).
std::optional<WorkloadKind> parse_workload_kind(std::string_view text);

enum class CrossPlacement {
  // Overflow runs from the source into the allocation right after it.
  Adjacent,
  // Overflow skips a freed spacer of another size class and lands in a victim
  // allocated after the spacer was freed.
  Distant,
};

struct SizeWeight {
  uint64_t size = 0;
  double weight = 1.0;
  friend bool operator==(const SizeWeight&, const SizeWeight&) = default;
};

// "24:1,40:2" -> {(24,1), (40,2)}; a bare size means weight 1.
std::vector<SizeWeight> parse_size_distribution(std::string_view text);
std::string render_size_distribution(const std::vector<SizeWeight>& sizes);
std::vector<SizeWeight> uniform_sizes(uint64_t lo, uint64_t hi);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Benign;
  std::vector<SizeWeight> sizes{{24, 1.0}, {40, 1.0}};
  uint64_t count = 1;
  uint64_t seed = 0;
  // Unrelated allocations made before the target, never freed.
  unsigned preamble_allocs = 4;
  // UseAfterFree: alloc/free cycles of the same size between the free and the
  // dangling access.
  unsigned reuse_cycles = 0;
  CrossPlacement placement = CrossPlacement::Adjacent;
  // In-bounds accesses per benign program.
  unsigned benign_accesses = 24;
};

struct GeneratedProgram {
  Program program;
  WorkloadKind kind = WorkloadKind::Benign;
  uint64_t target_size = 0;
  // Instruction that commits the planted bug; empty for benign programs.
  std::optional<size_t> bug_pc;
};

// Throws WorkloadSpecError when the spec cannot produce its kind.
void validate(const WorkloadSpec& spec);

// Program i depends only on (seed, i), never on count.
std::vector<GeneratedProgram> generate_workload(const WorkloadSpec& spec);

// Program text with a comment header naming the kind and the planted bug pc.
std::string render_generated(const GeneratedProgram& generated);

// Writes corpus/<kind>/<index>.mtr plus corpus/manifest.json.
void write_corpus(const std::filesystem::path& dir, const WorkloadSpec& spec,
                  const std::vector<GeneratedProgram>& programs);

}  // namespace mtesim

#endif  // MTESIM_TRACE_IO_H_
