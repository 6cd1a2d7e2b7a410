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

#ifndef MTESIM_TAGGED_MEMORY_H_
#define MTESIM_TAGGED_MEMORY_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace mtesim {

inline constexpr uint64_t kGranuleSize = 16;
inline constexpr unsigned kTagBits = 4;
inline constexpr uint8_t kTagMask = 0xF;

using Tag = uint8_t;

inline constexpr uint64_t granule_index(uint64_t addr) { return addr / kGranuleSize; }
inline constexpr uint64_t granule_base(uint64_t addr) { return addr & ~(kGranuleSize - 1); }

// Fraction of physical storage spent on tags when every `granule_bytes` of data
// carries `tag_bits` of tag: tag_bits / (8 * granule_bytes + tag_bits).
double tag_storage_overhead(uint64_t granule_bytes = kGranuleSize, unsigned tag_bits = kTagBits);

// A 64-bit pointer with the address tag in bits [59:56]. The top byte is
// ignored for addressing; bits [63:60] must be zero for a canonical pointer.
struct TaggedPointer {
  uint64_t raw = 0;

  static constexpr int kTagShift = 56;
  static constexpr uint64_t kTopByteMask = 0xFFULL << kTagShift;
  static constexpr uint64_t kHighNibbleMask = 0xF0ULL << kTagShift;

  static constexpr TaggedPointer make(uint64_t address, Tag tag) {
    return TaggedPointer{(address & ~kTopByteMask) |
                         (static_cast<uint64_t>(tag & kTagMask) << kTagShift)};
  }

  constexpr Tag tag() const { return static_cast<Tag>((raw >> kTagShift) & kTagMask); }
  constexpr uint64_t address() const { return raw & ~kTopByteMask; }
  constexpr bool canonical() const { return (raw & kHighNibbleMask) == 0; }

  friend constexpr bool operator==(TaggedPointer, TaggedPointer) = default;
};

// Sparse byte-addressable memory plus one 4-bit tag per 16-byte granule.
// Bytes and tags never written read back as zero.
class TaggedMemory {
 public:
  static constexpr uint64_t kPageSize = 4096;
  using Page = std::array<uint8_t, kPageSize>;

  void set_granule_tag(uint64_t addr, Tag tag);
  Tag get_granule_tag(uint64_t addr) const;

  uint8_t read_byte(uint64_t addr) const;
  void write_byte(uint64_t addr, uint8_t value);

  std::vector<uint8_t> read_bytes(uint64_t addr, uint64_t len) const;
  void write_bytes(uint64_t addr, std::span<const uint8_t> bytes);

  // Little-endian scalar access of up to 8 bytes.
  uint64_t read_le(uint64_t addr, unsigned len) const;
  void write_le(uint64_t addr, uint64_t value, unsigned len);

  size_t tagged_granule_count() const { return tags_.size(); }
  const std::unordered_map<uint64_t, Tag>& tags() const { return tags_; }

  // Addresses whose data bytes differ between the two memories, ascending.
  static std::vector<uint64_t> diff_data(const TaggedMemory& a, const TaggedMemory& b);

 private:
  const Page* find_page(uint64_t addr) const;
  Page& page_for(uint64_t addr);

  std::unordered_map<uint64_t, Page> pages_;
  // Only nonzero tags are stored; a missing entry reads as tag 0.
  std::unordered_map<uint64_t, Tag> tags_;
};

}  // namespace mtesim

#endif  // MTESIM_TAGGED_MEMORY_H_
