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

#include "mtesim/tagged_memory.h"

#include <algorithm>
#include <cassert>
#include <set>

namespace mtesim {

double tag_storage_overhead(uint64_t granule_bytes, unsigned tag_bits) {
  return static_cast<double>(tag_bits) /
         (static_cast<double>(granule_bytes) * 8.0 + static_cast<double>(tag_bits));
}

void TaggedMemory::set_granule_tag(uint64_t addr, Tag tag) {
  assert(tag <= kTagMask);
  const uint64_t index = granule_index(addr);
  if (tag == 0) {
    tags_.erase(index);
  } else {
    tags_[index] = tag & kTagMask;
  }
}

Tag TaggedMemory::get_granule_tag(uint64_t addr) const {
  auto it = tags_.find(granule_index(addr));
  return it == tags_.end() ? Tag{0} : it->second;
}

const TaggedMemory::Page* TaggedMemory::find_page(uint64_t addr) const {
  auto it = pages_.find(addr / kPageSize);
  return it == pages_.end() ? nullptr : &it->second;
}

TaggedMemory::Page& TaggedMemory::page_for(uint64_t addr) {
  auto [it, inserted] = pages_.try_emplace(addr / kPageSize);
  if (inserted) it->second.fill(0);
  return it->second;
}

uint8_t TaggedMemory::read_byte(uint64_t addr) const {
  const Page* page = find_page(addr);
  return page ? (*page)[addr % kPageSize] : uint8_t{0};
}

void TaggedMemory::write_byte(uint64_t addr, uint8_t value) {
  page_for(addr)[addr % kPageSize] = value;
}

std::vector<uint8_t> TaggedMemory::read_bytes(uint64_t addr, uint64_t len) const {
  std::vector<uint8_t> out(len);
  for (uint64_t i = 0; i < len; ++i) out[i] = read_byte(addr + i);
  return out;
}

void TaggedMemory::write_bytes(uint64_t addr, std::span<const uint8_t> bytes) {
  for (size_t i = 0; i < bytes.size(); ++i) write_byte(addr + i, bytes[i]);
}

uint64_t TaggedMemory::read_le(uint64_t addr, unsigned len) const {
  assert(len <= 8);
  uint64_t value = 0;
  for (unsigned i = 0; i < len; ++i) {
    value |= static_cast<uint64_t>(read_byte(addr + i)) << (8 * i);
  }
  return value;
}

void TaggedMemory::write_le(uint64_t addr, uint64_t value, unsigned len) {
  assert(len <= 8);
  for (unsigned i = 0; i < len; ++i) {
    write_byte(addr + i, static_cast<uint8_t>(value >> (8 * i)));
  }
}

std::vector<uint64_t> TaggedMemory::diff_data(const TaggedMemory& a, const TaggedMemory& b) {
  std::set<uint64_t> page_ids;
  for (const auto& [id, page] : a.pages_) page_ids.insert(id);
  for (const auto& [id, page] : b.pages_) page_ids.insert(id);

  static const Page kZero{};
  std::vector<uint64_t> diffs;
  for (uint64_t id : page_ids) {
    auto ia = a.pages_.find(id);
    auto ib = b.pages_.find(id);
    const Page& pa = ia == a.pages_.end() ? kZero : ia->second;
    const Page& pb = ib == b.pages_.end() ? kZero : ib->second;
    if (std::equal(pa.begin(), pa.end(), pb.begin())) continue;
    for (uint64_t i = 0; i < kPageSize; ++i) {
      if (pa[i] != pb[i]) diffs.push_back(id * kPageSize + i);
    }
  }
  return diffs;
}

}  // namespace mtesim
