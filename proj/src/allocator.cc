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

#include "mtesim/allocator.h"

#include <algorithm>
#include <array>
#include <bit>

#include "mtesim/short_granule.h"

namespace mtesim {

Tag generate_tag(TagMask exclude, Rng& rng, bool allow_zero) {
  if (!allow_zero) exclude |= tag_bit(0);
  std::array<Tag, 16> candidates{};
  size_t n = 0;
  for (Tag t = 0; t < 16; ++t) {
    if (!(exclude & tag_bit(t))) candidates[n++] = t;
  }
  if (n == 0) throw TagSpaceExhausted("every tag is excluded");
  return candidates[rng.uniform(0, n - 1)];
}

Allocator::Allocator(TaggedMemory& memory, AllocatorConfig config, SamplerConfig sampler_config,
                     const Rng& root)
    : memory_(memory),
      config_(config),
      sampler_(sampler_config),
      tag_rng_(root.substream("allocator")),
      sampler_rng_(root.substream("sampler")),
      heap_top_(config.heap_base),
      large_top_(config.large_base) {}

const Allocator::Region* Allocator::region_at(uint64_t addr) const {
  auto it = regions_.upper_bound(addr);
  if (it == regions_.begin()) return nullptr;
  --it;
  if (addr >= it->first + it->second.usable) return nullptr;
  return &it->second;
}

const AllocationRecord* Allocator::find_latest(uint64_t addr) const {
  const Region* region = region_at(addr);
  return region ? &record(region->record_id) : nullptr;
}

const AllocationRecord* Allocator::find_live(uint64_t addr) const {
  const AllocationRecord* rec = find_latest(addr);
  return rec && rec->state == AllocState::Live ? rec : nullptr;
}

const AllocationRecord* Allocator::find_by_id(uint64_t id) const {
  if (id == 0 || id > records_.size()) return nullptr;
  return &record(id);
}

std::vector<const AllocationRecord*> Allocator::live_allocations() const {
  std::vector<const AllocationRecord*> out;
  for (const auto& [base, region] : regions_) {
    const AllocationRecord& rec = record(region.record_id);
    if (rec.state == AllocState::Live) out.push_back(&rec);
  }
  return out;
}

void Allocator::set_tripwire_state(uint64_t id, TripwireState state) {
  record(id).tripwire = state;
}

TagMask Allocator::neighbor_exclusion(uint64_t base, uint64_t usable) const {
  TagMask exclude = 0;
  const Region* left = base > 0 ? region_at(base - 1) : nullptr;
  auto right_it = regions_.find(base + usable);
  const Region* right = right_it == regions_.end() ? nullptr : &right_it->second;

  for (const Region* n : {left, right}) {
    if (n && record(n->record_id).state == AllocState::Live) exclude |= tag_bit(n->tag);
  }
  if (config_.odd_even) {
    // Parity is decided by the left neighbor whenever there is one; a freed
    // neighbor still counts because it may be handed out again with its tag.
    const Region* parity_source = left ? left : right;
    if (parity_source) exclude |= same_parity_tags(parity_source->tag);
  }
  return exclude;
}

void Allocator::tag_range(uint64_t base, uint64_t usable, Tag tag) {
  for (uint64_t g = base; g < base + usable; g += kGranuleSize) memory_.set_granule_tag(g, tag);
}

TaggedPointer Allocator::allocate_large(uint64_t requested) {
  const uint64_t usable = size_class(requested);
  if (large_top_ + usable > config_.large_base + config_.large_size) {
    throw AllocationFailure("large region exhausted");
  }
  const uint64_t base = large_top_;
  large_top_ += usable;

  AllocationRecord rec;
  rec.id = records_.size() + 1;
  rec.base = base;
  rec.requested_size = requested;
  rec.usable_size = usable;
  rec.large = true;
  records_.push_back(rec);
  regions_[base] = Region{usable, rec.id, 0};
  ++stats_.allocations;
  return TaggedPointer::make(base, 0);
}

TaggedPointer Allocator::allocate(uint64_t requested) {
  if (requested > config_.large_threshold) return allocate_large(requested);

  const uint64_t usable = size_class(requested);
  AllocationRecord rec;
  rec.id = records_.size() + 1;
  rec.requested_size = requested;
  rec.usable_size = usable;

  // Only allocations that own a short granule ever touch the sampler.
  bool arm = false;
  if (rec.has_short_granule() && config_.tripwires_enabled) arm = sampler_.should_arm(sampler_rng_);
  const unsigned addressable = rec.addressable_in_last();
  // A tripwire tag must differ from the allocation's real tag, otherwise the
  // short granule would never fault. The exclusion applies whether or not this
  // allocation is armed so that tag layout does not depend on sampling.
  const TagMask tripwire_exclusion =
      rec.has_short_granule() ? tag_bit(static_cast<Tag>(addressable)) : TagMask{0};

  auto& fifo = free_lists_[usable];
  Tag tag;
  if (!fifo.empty()) {
    rec.base = fifo.front();
    fifo.pop_front();
    tag = regions_.at(rec.base).tag;
    if (tripwire_exclusion & tag_bit(tag)) {
      TagMask exclude = tripwire_exclusion | neighbor_exclusion(rec.base, usable);
      if (config_.odd_even) exclude |= static_cast<TagMask>(~same_parity_tags(tag));
      tag = generate_tag(exclude, tag_rng_, config_.allow_zero_tag);
      tag_range(rec.base, usable, tag);
    }
  } else {
    if (heap_top_ + usable > config_.heap_base + config_.heap_size) {
      throw AllocationFailure("primary heap exhausted");
    }
    rec.base = heap_top_;
    heap_top_ += usable;
    tag = generate_tag(neighbor_exclusion(rec.base, usable) | tripwire_exclusion, tag_rng_,
                       config_.allow_zero_tag);
    tag_range(rec.base, usable, tag);
  }
  rec.tag = tag;

  // Padding starts out zero so stale bytes never look like metadata.
  for (uint64_t a = rec.base + requested; a < rec.base + usable; ++a) memory_.write_byte(a, 0);

  // Tag 0 cannot be stashed as a real tag, so such allocations stay unarmed.
  if (arm && tag != 0) {
    memory_.set_granule_tag(rec.last_granule(), static_cast<Tag>(addressable));
    write_metadata(memory_, rec.last_granule(), addressable, tag, 0);
    rec.tripwire = TripwireState::Armed;
    ++stats_.tripwires_armed;
  }

  records_.push_back(rec);
  regions_[rec.base] = Region{usable, rec.id, tag};
  ++stats_.allocations;
  return TaggedPointer::make(rec.base, tag);
}

FreeVerdict Allocator::check_free(TaggedPointer ptr) const {
  FreeVerdict v;
  v.address = ptr.address();
  v.addrtag = ptr.tag();
  v.memtag = memory_.get_granule_tag(v.address);

  auto it = regions_.find(v.address);
  if (it == regions_.end() || !ptr.canonical()) {
    v.kind = FreeVerdict::Kind::MismatchBug;
    return v;
  }
  const AllocationRecord& rec = record(it->second.record_id);
  if (rec.state != AllocState::Live) {
    v.kind = FreeVerdict::Kind::MismatchBug;
    v.double_free = true;
  } else if (ptr.tag() != rec.tag) {
    v.kind = FreeVerdict::Kind::MismatchBug;
  }
  return v;
}

FreeVerdict Allocator::free(TaggedPointer ptr) {
  FreeVerdict v = check_free(ptr);
  if (!v.ok()) return v;

  Region& region = regions_.at(v.address);
  AllocationRecord& rec = record(region.record_id);
  rec.state = AllocState::Freed;
  ++stats_.frees;
  if (rec.large) return v;

  if (rec.has_short_granule()) clear_metadata(memory_, rec.last_granule(), rec.addressable_in_last());
  // Scrub the metadata nibble of every granule so stale user data cannot pose
  // as a real tag when a dangling pointer faults here.
  for (uint64_t g = rec.base; g < rec.end(); g += kGranuleSize) set_metadata_nibble(memory_, g, 0);

  TagMask exclude = tag_bit(rec.tag);
  if (config_.odd_even) exclude |= static_cast<TagMask>(~same_parity_tags(rec.tag));
  const Tag fresh = generate_tag(exclude, tag_rng_, config_.allow_zero_tag);
  tag_range(rec.base, rec.usable_size, fresh);
  region.tag = fresh;
  free_lists_[rec.usable_size].push_back(rec.base);
  return v;
}

ReallocResult Allocator::reallocate(TaggedPointer ptr, uint64_t new_size) {
  ReallocResult result;
  result.verdict = check_free(ptr);
  if (!result.verdict.ok()) return result;

  const uint64_t old_id = regions_.at(ptr.address()).record_id;
  const uint64_t old_requested = record(old_id).requested_size;
  const uint64_t old_base = record(old_id).base;

  const TaggedPointer fresh = allocate(new_size);
  const std::vector<uint8_t> bytes = memory_.read_bytes(old_base, std::min(old_requested, new_size));
  memory_.write_bytes(fresh.address(), bytes);
  result.verdict = free(ptr);
  result.pointer = fresh;
  return result;
}

}  // namespace mtesim
