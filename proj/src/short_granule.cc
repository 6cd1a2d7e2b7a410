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

#include "mtesim/short_granule.h"

#include <cassert>

namespace mtesim {

ShortGranuleMetadata read_metadata(const TaggedMemory& mem, uint64_t granule,
                                   unsigned addressable) {
  assert(addressable >= 1 && addressable <= 15);
  const uint64_t base = granule_base(granule);
  const uint8_t last = mem.read_byte(base + 15);
  ShortGranuleMetadata meta;
  meta.real_tag = last & kTagMask;
  meta.access_count = last >> 4;
  meta.capacity = counter_capacity(addressable);
  if (padding_bytes(addressable) >= 2) {
    meta.access_count |= static_cast<uint16_t>(mem.read_byte(base + 14)) << 4;
  }
  return meta;
}

void write_metadata(TaggedMemory& mem, uint64_t granule, unsigned addressable, Tag real_tag,
                    uint16_t access_count) {
  assert(addressable >= 1 && addressable <= 15);
  assert(access_count <= counter_capacity(addressable));
  const uint64_t base = granule_base(granule);
  mem.write_byte(base + 15, static_cast<uint8_t>(((access_count & 0xF) << 4) | (real_tag & kTagMask)));
  if (padding_bytes(addressable) >= 2) {
    mem.write_byte(base + 14, static_cast<uint8_t>(access_count >> 4));
  }
}

void clear_metadata(TaggedMemory& mem, uint64_t granule, unsigned addressable) {
  const uint64_t base = granule_base(granule);
  mem.write_byte(base + 15, 0);
  if (padding_bytes(addressable) >= 2) mem.write_byte(base + 14, 0);
}

void set_metadata_nibble(TaggedMemory& mem, uint64_t granule, Tag value) {
  const uint64_t addr = granule_base(granule) + 15;
  const uint8_t byte = mem.read_byte(addr);
  mem.write_byte(addr, static_cast<uint8_t>((byte & 0xF0) | (value & kTagMask)));
}

std::optional<TripwireView> inspect_tripwire(const TaggedMemory& mem, uint64_t granule) {
  const Tag memtag = mem.get_granule_tag(granule);
  if (memtag == 0) return std::nullopt;
  const ShortGranuleMetadata meta = read_metadata(mem, granule, memtag);
  if (meta.real_tag == 0 || meta.real_tag == memtag) return std::nullopt;
  return TripwireView{memtag, meta};
}

}  // namespace mtesim
