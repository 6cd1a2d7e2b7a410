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

#ifndef MTESIM_ALLOCATOR_H_
#define MTESIM_ALLOCATOR_H_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mtesim/rng.h"
#include "mtesim/tagged_memory.h"
#include "mtesim/tripwire_sampler.h"

namespace mtesim {

// Bit t set means tag t is excluded.
using TagMask = uint16_t;

inline constexpr TagMask tag_bit(Tag t) { return static_cast<TagMask>(1u << (t & kTagMask)); }
inline constexpr TagMask kOddTags = 0xAAAA;
inline constexpr TagMask kEvenTags = 0x5555;
inline constexpr TagMask same_parity_tags(Tag t) { return (t & 1) ? kOddTags : kEvenTags; }

class TagSpaceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AllocationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform draw from {allow_zero ? 0 : 1, ..., 15} minus `exclude`.
Tag generate_tag(TagMask exclude, Rng& rng, bool allow_zero = false);

inline constexpr uint64_t kDefaultLargeThreshold = 65536;

// Smallest multiple of 16 that holds `requested`; zero maps to 16.
constexpr uint64_t size_class(uint64_t requested) {
  if (requested == 0) return kGranuleSize;
  return (requested + kGranuleSize - 1) & ~(kGranuleSize - 1);
}

enum class AllocState { Live, Freed };
enum class TripwireState { None, Armed, Delegated, Removed };

struct AllocationRecord {
  uint64_t id = 0;
  uint64_t base = 0;
  uint64_t requested_size = 0;
  uint64_t usable_size = 0;
  Tag tag = 0;
  AllocState state = AllocState::Live;
  TripwireState tripwire = TripwireState::None;
  bool large = false;

  bool has_short_granule() const { return requested_size % kGranuleSize != 0; }
  unsigned addressable_in_last() const {
    return static_cast<unsigned>(requested_size % kGranuleSize);
  }
  uint64_t last_granule() const { return base + usable_size - kGranuleSize; }
  uint64_t end() const { return base + usable_size; }
  bool contains(uint64_t addr) const { return addr >= base && addr < end(); }
};

struct AllocatorConfig {
  uint64_t large_threshold = kDefaultLargeThreshold;
  bool odd_even = true;
  bool tripwires_enabled = true;
  // Admit tag 0 for tagged allocations, i.e. a full 16-tag space. Only for
  // collision-rate experiments.
  bool allow_zero_tag = false;
  uint64_t heap_base = 0x1000'0000;
  uint64_t heap_size = 1ULL << 36;
  uint64_t large_base = 0x8000'0000'0000;
  uint64_t large_size = 1ULL << 40;
};

struct FreeVerdict {
  enum class Kind { Ok, MismatchBug };
  Kind kind = Kind::Ok;
  uint64_t address = 0;
  Tag addrtag = 0;
  Tag memtag = 0;
  // The address names an allocation that was already freed.
  bool double_free = false;

  bool ok() const { return kind == Kind::Ok; }
};

struct ReallocResult {
  FreeVerdict verdict;
  std::optional<TaggedPointer> pointer;
};

struct AllocatorStats {
  uint64_t allocations = 0;
  uint64_t frees = 0;
  uint64_t tripwires_armed = 0;
};

// Primary allocator in the style of a hardened tagging allocator.
//
// Regions are carved from a bump pointer and never coalesced, so the set of
// address-space neighbors of a region is fixed for its lifetime. Freed regions
// are kept per size class in FIFO order and served again with the tag they
// received at free time.
//
// The allocator keeps a reference to `memory`, which must outlive it.
class Allocator {
 public:
  Allocator(TaggedMemory& memory, AllocatorConfig config, SamplerConfig sampler_config,
            const Rng& root);

  Allocator(const Allocator&) = delete;
  Allocator& operator=(const Allocator&) = delete;

  TaggedPointer allocate(uint64_t requested);
  FreeVerdict free(TaggedPointer ptr);
  ReallocResult reallocate(TaggedPointer ptr, uint64_t new_size);

  // Live allocation whose usable range contains `addr`.
  const AllocationRecord* find_live(uint64_t addr) const;
  // Most recent allocation of the region containing `addr`, live or freed.
  const AllocationRecord* find_latest(uint64_t addr) const;
  const AllocationRecord* find_by_id(uint64_t id) const;
  // Live allocations in ascending address order.
  std::vector<const AllocationRecord*> live_allocations() const;
  const std::vector<AllocationRecord>& records() const { return records_; }

  void set_tripwire_state(uint64_t id, TripwireState state);

  const AllocatorConfig& config() const { return config_; }
  const TripwireSampler& sampler() const { return sampler_; }
  const AllocatorStats& stats() const { return stats_; }
  TaggedMemory& memory() { return memory_; }

 private:
  struct Region {
    uint64_t usable = 0;
    uint64_t record_id = 0;  // latest occupant
    Tag tag = 0;             // current tag of every granule (free-time tag once freed)
  };

  TaggedPointer allocate_large(uint64_t requested);
  FreeVerdict check_free(TaggedPointer ptr) const;
  TagMask neighbor_exclusion(uint64_t base, uint64_t usable) const;
  void tag_range(uint64_t base, uint64_t usable, Tag tag);
  const Region* region_at(uint64_t addr) const;
  AllocationRecord& record(uint64_t id) { return records_[id - 1]; }
  const AllocationRecord& record(uint64_t id) const { return records_[id - 1]; }

  TaggedMemory& memory_;
  AllocatorConfig config_;
  TripwireSampler sampler_;
  Rng tag_rng_;
  Rng sampler_rng_;

  std::vector<AllocationRecord> records_;  // id = index + 1
  std::map<uint64_t, Region> regions_;     // keyed by base
  std::unordered_map<uint64_t, std::deque<uint64_t>> free_lists_;
  uint64_t heap_top_;
  uint64_t large_top_;
  AllocatorStats stats_;
};

}  // namespace mtesim

#endif  // MTESIM_ALLOCATOR_H_
