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

#ifndef MTESIM_SHORT_GRANULE_H_
#define MTESIM_SHORT_GRANULE_H_

#include <cstdint>
#include <optional>

#include "mtesim/tagged_memory.h"

namespace mtesim {

// In-band tripwire metadata, stored in the non-addressable padding of a short
// granule. Layout, byte offsets relative to the granule base:
//
//   byte 15: [access_count[3:0] | real_tag]
//   byte 14: access_count[11:4]      (only when padding >= 2 bytes)
//
// With exactly one padding byte the counter is 4 bits wide.
struct ShortGranuleMetadata {
  Tag real_tag = 0;
  uint16_t access_count = 0;
  uint16_t capacity = 0;
};

inline constexpr unsigned padding_bytes(unsigned addressable) { return 16 - addressable; }

inline constexpr uint16_t counter_capacity(unsigned addressable) {
  return padding_bytes(addressable) == 1 ? 15 : 4095;
}

ShortGranuleMetadata read_metadata(const TaggedMemory& mem, uint64_t granule,
                                   unsigned addressable);
void write_metadata(TaggedMemory& mem, uint64_t granule, unsigned addressable, Tag real_tag,
                    uint16_t access_count);
// Zeroes every byte the metadata may occupy.
void clear_metadata(TaggedMemory& mem, uint64_t granule, unsigned addressable);

// Low nibble of the granule's last byte.
inline Tag metadata_nibble(const TaggedMemory& mem, uint64_t granule) {
  return mem.read_byte(granule_base(granule) + 15) & kTagMask;
}
void set_metadata_nibble(TaggedMemory& mem, uint64_t granule, Tag value);

// Rebuilds an armed tripwire purely from memory: the granule tag is the
// addressable byte count and the metadata nibble holds a nonzero real tag.
struct TripwireView {
  unsigned addressable = 0;
  ShortGranuleMetadata metadata;
};
std::optional<TripwireView> inspect_tripwire(const TaggedMemory& mem, uint64_t granule);

}  // namespace mtesim

#endif  // MTESIM_SHORT_GRANULE_H_
