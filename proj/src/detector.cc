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

#include "mtesim/detector.h"

#include <algorithm>

#include "mtesim/short_granule.h"

namespace mtesim {

std::string_view to_string(BugKind kind) {
  switch (kind) {
    case BugKind::IntraGranuleOverflow: return "IntraGranuleOverflow";
    case BugKind::CrossGranuleOverflow: return "CrossGranuleOverflow";
    case BugKind::UseAfterFreeOrWild: return "UseAfterFreeOrWild";
    case BugKind::ZeroTag: return "ZeroTag";
  }
  return "?";
}

bool check_access(uint64_t f, uint64_t start, uint64_t size, Tag addrtag, Tag memtag,
                  Tag metadata) {
  if (memtag == 0 || addrtag == 0) return false;
  if (addrtag != metadata) return false;
  const uint64_t short_granule = f & ~(kGranuleSize - 1);
  const uint64_t permitted = short_granule + memtag;
  const uint64_t attempted = start + size;
  return attempted <= permitted;
}

CounterState bump_access_count(TaggedMemory& mem, uint64_t granule, unsigned addressable,
                               uint32_t access_threshold) {
  ShortGranuleMetadata meta = read_metadata(mem, granule, addressable);
  if (meta.access_count < meta.capacity) ++meta.access_count;
  write_metadata(mem, granule, addressable, meta.real_tag, meta.access_count);
  if (meta.access_count >= meta.capacity) return CounterState::ReachedCapacity;
  if (meta.access_count >= access_threshold) return CounterState::ReachedThreshold;
  return CounterState::Below;
}

BugKind classify(Tag addrtag, Tag memtag, Tag metadata, uint64_t fault_address,
                 const Allocator& allocator) {
  if (memtag == 0 || addrtag == 0) return BugKind::ZeroTag;
  if (metadata == addrtag) return BugKind::IntraGranuleOverflow;

  const AllocationRecord* here = allocator.find_latest(fault_address);
  if (here && here->state == AllocState::Freed) return BugKind::UseAfterFreeOrWild;

  // An overflow usually runs upward out of a live allocation carrying the
  // pointer's tag; look for the nearest such allocation below the fault.
  const auto live = allocator.live_allocations();
  for (auto it = live.rbegin(); it != live.rend(); ++it) {
    const AllocationRecord& rec = **it;
    if (rec.base > fault_address || rec.contains(fault_address)) continue;
    if (rec.tag == addrtag) return BugKind::CrossGranuleOverflow;
  }
  return BugKind::UseAfterFreeOrWild;
}

BugReport make_bug_report(const Fault& fault, BugKind kind) {
  BugReport report;
  report.pc = fault.pc;
  report.fault_address = fault.fault_address;
  report.regs = fault.regs;
  report.addrtag = fault.access.addrtag;
  report.memtag = fault.memtag;
  report.kind = kind;
  if (kind == BugKind::IntraGranuleOverflow) {
    report.addressable_bytes = fault.memtag;
    report.accessed_bytes_in_granule = fault.access.end() - granule_base(fault.fault_address);
  }
  return report;
}

Detector::Detector(DetectorConfig config) : config_(config) {
  if (config_.access_threshold < 1) {
    throw std::invalid_argument("access_threshold must be at least 1");
  }
}

size_t Detector::delegated_count() const {
  size_t n = 0;
  for (const auto& [pc, list] : delegations_) n += list.size();
  return n;
}

void Detector::note_state(Allocator& allocator, uint64_t id, TripwireState state) {
  if (id != 0) allocator.set_tripwire_state(id, state);
}

HandlerAction Detector::handle_tag_mismatch(const Fault& fault, const Instruction& instr,
                                            TaggedMemory& mem, Allocator& allocator,
                                            Machine& machine) {
  const uint64_t f = fault.fault_address;
  const uint64_t granule = granule_base(f);
  // In-band reads only: the granule tag and the last byte of the granule.
  const Tag memtag = mem.get_granule_tag(f);
  const Tag metadata = metadata_nibble(mem, granule);
  const AccessDescriptor& access = fault.access;

  Fault observed = fault;
  observed.memtag = memtag;
  observed.metadata = metadata;
  auto report = [&](BugKind kind) {
    return HandlerAction{HandlerAction::Kind::Report, make_bug_report(observed, kind)};
  };

  if (!access.canonical) return report(BugKind::UseAfterFreeOrWild);

  bool benign;
  if (config_.overread_skip && instr.overread_ok) {
    benign = memtag != 0 && access.addrtag != 0 && access.addrtag == metadata;
  } else {
    benign = check_access(f, access.start, access.size, access.addrtag, memtag, metadata);
  }
  if (!benign) return report(classify(access.addrtag, memtag, metadata, f, allocator));

  ++stats_.benign_hits;
  const AllocationRecord* owner = allocator.find_live(f);
  const uint64_t owner_id = owner ? owner->id : 0;
  const HandlerAction resume{config_.mutation == Mutation::SkipFaultingAccess
                                 ? HandlerAction::Kind::SkipAccess
                                 : HandlerAction::Kind::Resume,
                             std::nullopt};

  // The granule tag of an armed tripwire is its addressable byte count.
  if (bump_access_count(mem, granule, memtag, config_.access_threshold) != CounterState::Below) {
    mem.set_granule_tag(granule, metadata);
    clear_metadata(mem, granule, memtag);
    note_state(allocator, owner_id, TripwireState::Removed);
    ++stats_.removed_by_threshold;
    return resume;
  }

  // Delegation: swap the granule tag with the metadata nibble.
  mem.set_granule_tag(granule, metadata);
  set_metadata_nibble(mem, granule, memtag);
  note_state(allocator, owner_id, TripwireState::Delegated);
  ++stats_.delegations;

  // Escalation: trap right after the faulting instruction.
  const size_t next = fault.access_pc + 1;
  if (machine.set_trap(next) == TrapResult::Unavailable) {
    // Nothing can revoke the delegation, so the tripwire is gone for good.
    set_metadata_nibble(mem, granule, metadata);
    note_state(allocator, owner_id, TripwireState::Removed);
    ++stats_.removed_by_ret_edge;
    return resume;
  }
  delegations_[next].push_back(Delegation{granule, owner_id});
  return resume;
}

void Detector::handle_trap(size_t pc, TaggedMemory& mem, Allocator& allocator,
                           Machine& machine) {
  auto it = delegations_.find(pc);
  if (it == delegations_.end()) {
    throw DetectorInvariantError("trap at pc " + std::to_string(pc) +
                                 " has no delegated tripwire behind it");
  }
  for (const Delegation& d : it->second) {
    if (config_.mutation == Mutation::SkipRevocation) continue;
    // Revocation: the same swap again.
    const Tag real_tag = mem.get_granule_tag(d.granule);
    const Tag tripwire_tag = metadata_nibble(mem, d.granule);
    mem.set_granule_tag(d.granule, tripwire_tag);
    set_metadata_nibble(mem, d.granule, real_tag);
    note_state(allocator, d.allocation_id, TripwireState::Armed);
    ++stats_.revocations;
  }
  delegations_.erase(it);
  machine.clear_trap(pc);
}

}  // namespace mtesim
