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

#ifndef MTESIM_DETECTOR_H_
#define MTESIM_DETECTOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "mtesim/allocator.h"
#include "mtesim/cpu.h"
#include "mtesim/tagged_memory.h"

namespace mtesim {

enum class BugKind { IntraGranuleOverflow, CrossGranuleOverflow, UseAfterFreeOrWild, ZeroTag };

std::string_view to_string(BugKind kind);

struct BugReport {
  size_t pc = 0;
  uint64_t fault_address = 0;
  RegisterFile regs{};
  Tag addrtag = 0;
  Tag memtag = 0;
  BugKind kind = BugKind::UseAfterFreeOrWild;
  std::optional<unsigned> addressable_bytes;
  std::optional<uint64_t> accessed_bytes_in_granule;
};

// Byte-granular check run when a tag mismatch may have been caused by a
// tripwire. Returns true iff the access is benign. Pure: the decision depends
// on these six values only.
//
//   f         fault address, inside the granule under test
//   start     first accessed byte
//   size      bytes accessed
//   addrtag   pointer tag
//   memtag    granule tag; for a tripwire, the addressable byte count
//   metadata  low nibble of the granule's last byte; for a tripwire, the real tag
bool check_access(uint64_t f, uint64_t start, uint64_t size, Tag addrtag, Tag memtag,
                  Tag metadata);

enum class CounterState { Below, ReachedCapacity, ReachedThreshold };

// Increments the in-band AccessCount of an armed short granule whose first
// `addressable` bytes are usable.
CounterState bump_access_count(TaggedMemory& mem, uint64_t granule, unsigned addressable,
                               uint32_t access_threshold);

// Faults injected on purpose to show that the transparency and re-arming
// checks notice a broken recovery protocol.
enum class Mutation {
  None,
  // Trap fires but the tripwire is left delegated.
  SkipRevocation,
  // Resume past the faulting instruction instead of re-executing it.
  SkipFaultingAccess,
};

struct DetectorConfig {
  uint32_t access_threshold = 64;
  bool tripwires_enabled = true;
  bool overread_skip = false;
  Mutation mutation = Mutation::None;
};

struct HandlerAction {
  enum class Kind { Resume, Report, SkipAccess };
  Kind kind = Kind::Resume;
  std::optional<BugReport> report;
};

struct DetectorStats {
  uint64_t benign_hits = 0;
  uint64_t delegations = 0;
  uint64_t revocations = 0;
  uint64_t removed_by_threshold = 0;
  uint64_t removed_by_ret_edge = 0;
};

// A trap fired with nothing delegated behind it.
class DetectorInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Labels a confirmed bug. Uses the allocator registry for the label only; the
// benign/bug decision never consults it.
BugKind classify(Tag addrtag, Tag memtag, Tag metadata, uint64_t fault_address,
                 const Allocator& allocator);

BugReport make_bug_report(const Fault& fault, BugKind kind);

// Tag mismatch handler: byte-granular check plus delegation, escalation and
// revocation of tripwires.
class Detector {
 public:
  explicit Detector(DetectorConfig config = {});

  HandlerAction handle_tag_mismatch(const Fault& fault, const Instruction& instr,
                                    TaggedMemory& mem, Allocator& allocator, Machine& machine);

  // Revokes every delegation waiting on the trap at `pc` and clears the trap.
  void handle_trap(size_t pc, TaggedMemory& mem, Allocator& allocator, Machine& machine);

  size_t delegated_count() const;
  const DetectorStats& stats() const { return stats_; }
  const DetectorConfig& config() const { return config_; }

 private:
  struct Delegation {
    uint64_t granule = 0;
    uint64_t allocation_id = 0;  // 0 when the registry has no owner
  };

  void note_state(Allocator& allocator, uint64_t id, TripwireState state);

  DetectorConfig config_;
  std::map<size_t, std::vector<Delegation>> delegations_;
  DetectorStats stats_;
};

}  // namespace mtesim

#endif  // MTESIM_DETECTOR_H_
