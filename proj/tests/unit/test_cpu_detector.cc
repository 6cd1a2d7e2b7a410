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

#include "doctest.h"
#include "mtesim/detector.h"
#include "mtesim/short_granule.h"
#include "mtesim/trace_io.h"
#include "oracles.h"

using namespace mtesim;

TEST_CASE("decode computes tagged effective addresses") {
  RegisterFile regs{};
  regs[1] = TaggedPointer::make(0x1000, 5).raw;
  regs[2] = 24;
  const Program p = parse_program("ld r0 [r1, #-8] w4 p2\nst r3 [r1, r2] w16 p1\nhalt\n");
  AccessDescriptor d = decode(p[0], regs, 0);
  CHECK(d.start == 0xff8);
  CHECK(d.size == 8);
  CHECK(d.addrtag == 5);
  CHECK_FALSE(d.is_store);
  d = decode(p[1], regs, 1);
  CHECK(d.start == 0x1018);
  CHECK(d.size == 16);
  CHECK(d.is_store);
  CHECK(d.pc == 1);
}

TEST_CASE("tag_check reports the first mismatching granule") {
  TaggedMemory mem;
  mem.set_granule_tag(0x1000, 5);
  mem.set_granule_tag(0x1010, 5);
  mem.set_granule_tag(0x1020, 9);
  RegisterFile regs{};
  AccessDescriptor d{0x1008, 32, 5, 3, false, true};
  auto f = tag_check(d, mem, regs);
  REQUIRE(f);
  CHECK(f->fault_address == 0x1020);
  CHECK(f->memtag == 9);
  CHECK(f->access_pc == 3);
  d.size = 24;
  CHECK_FALSE(tag_check(d, mem, regs));
  d.start = 0x1004;
  d.addrtag = 6;
  f = tag_check(d, mem, regs);
  REQUIRE(f);
  CHECK(f->fault_address == 0x1004);  // first byte, not the granule base
  d.canonical = false;
  d.addrtag = 5;
  CHECK(tag_check(d, mem, regs));
}

TEST_CASE("traps cannot be placed on ret, halt, or past the end") {
  Machine m(parse_program("ld r0 [r1] w1 p1\nret\nmov r0 1\nhalt\n"), Mode::Sync);
  CHECK(m.set_trap(0) == TrapResult::Set);
  CHECK(m.set_trap(1) == TrapResult::Unavailable);
  CHECK(m.set_trap(2) == TrapResult::Set);
  CHECK(m.set_trap(3) == TrapResult::Unavailable);
  CHECK(m.set_trap(4) == TrapResult::Unavailable);
  CHECK(m.trap_count() == 2);
  CHECK(m.regs()[kStackPointer] == Machine::kInitialStackPointer);
}

TEST_CASE("check_access follows the permitted/attempted rule") {
  // 40-byte allocation at 0x20: short granule at 0x40 with 8 addressable bytes.
  CHECK(check_access(0x40, 0x40, 8, 6, 8, 6));
  CHECK(check_access(0x44, 0x44, 4, 6, 8, 6));
  CHECK_FALSE(check_access(0x44, 0x44, 8, 6, 8, 6));  // ends at 12 > 8
  CHECK(check_access(0x40, 0x38, 16, 6, 8, 6));       // starts in the previous granule
  CHECK_FALSE(check_access(0x40, 0x40, 1, 6, 8, 7));  // pointer tag is not the real tag
  CHECK_FALSE(check_access(0x40, 0x40, 1, 0, 8, 0));
  CHECK_FALSE(check_access(0x40, 0x40, 1, 6, 0, 6));
}

TEST_CASE("check_access agrees with the byte-set oracle (both fault positions)") {
  uint64_t cases = 0, mismatches = 0;
  const uint64_t g = 0x1000;
  for (unsigned a = 0; a < 16; ++a)
    for (unsigned m = 0; m < 16; ++m)
      for (unsigned md = 0; md < 16; ++md)
        for (uint64_t off = 0; off < 16; ++off)
          for (uint64_t size : {1, 2, 4, 8, 16, 32}) {
            // Fault at the first byte of the access.
            const uint64_t s1 = g + off;
            mismatches += check_access(s1, s1, size, a, m, md) !=
                          oracle::access_benign(g, s1, size, a, m, md);
            // Access that starts in the previous granule and faults at g.
            const uint64_t s2 = g - 16 + off;
            if (s2 + size > g) {
              mismatches += check_access(g, s2, size, a, m, md) !=
                            oracle::access_benign(g, s2, size, a, m, md);
              ++cases;
            }
            ++cases;
          }
  CHECK(cases > 400000);
  CHECK(mismatches == 0);
}

TEST_CASE("bump_access_count: threshold and capacity") {
  TaggedMemory mem;
  write_metadata(mem, 0x100, 8, 3, 0);
  for (int i = 1; i < 64; ++i) REQUIRE(bump_access_count(mem, 0x100, 8, 64) == CounterState::Below);
  CHECK(bump_access_count(mem, 0x100, 8, 64) == CounterState::ReachedThreshold);
  CHECK(read_metadata(mem, 0x100, 8).real_tag == 3);

  write_metadata(mem, 0x200, 15, 3, 0);
  for (int i = 1; i < 15; ++i) REQUIRE(bump_access_count(mem, 0x200, 15, 64) == CounterState::Below);
  CHECK(bump_access_count(mem, 0x200, 15, 64) == CounterState::ReachedCapacity);
}

namespace {

// A hand-built armed tripwire with no allocator record behind it: the handler
// must work from the granule tag and padding bytes alone.
struct BareTripwire {
  static constexpr uint64_t kBase = 0x5000;
  static constexpr Tag kReal = 0xB;
  TaggedMemory mem;
  Allocator allocator{mem, AllocatorConfig{}, SamplerConfig{}, Rng(0)};
  Machine machine{parse_program("ld r2 [r1, #0] w8 p1\nld r2 [r1, #0] w8 p1\nret\nhalt\n"),
                  Mode::Sync};
  Detector detector;

  BareTripwire() {
    mem.set_granule_tag(kBase, kReal);
    mem.set_granule_tag(kBase + 16, 8);
    write_metadata(mem, kBase + 16, 8, kReal, 0);
    machine.regs()[1] = TaggedPointer::make(kBase + 16, kReal).raw;
  }

  Fault fault_at(size_t pc, uint64_t start, uint32_t size) {
    AccessDescriptor d{start, size, kReal, pc, false, true};
    auto f = tag_check(d, mem, machine.regs());
    REQUIRE(f);
    return *f;
  }
};

}  // namespace

TEST_CASE("delegation, escalation and revocation use only in-band metadata") {
  BareTripwire t;
  REQUIRE(t.allocator.records().empty());
  const Fault f = t.fault_at(0, BareTripwire::kBase + 16, 8);
  CHECK(f.memtag == 8);
  const HandlerAction act = t.detector.handle_tag_mismatch(f, t.machine.program()[0], t.mem,
                                                           t.allocator, t.machine);
  CHECK(act.kind == HandlerAction::Kind::Resume);
  // Delegated: granule carries the real tag, the nibble holds the tripwire tag.
  CHECK(t.mem.get_granule_tag(BareTripwire::kBase + 16) == BareTripwire::kReal);
  CHECK(metadata_nibble(t.mem, BareTripwire::kBase + 16) == 8);
  CHECK(t.machine.has_trap(1));
  CHECK(t.detector.delegated_count() == 1);

  t.detector.handle_trap(1, t.mem, t.allocator, t.machine);
  CHECK(t.mem.get_granule_tag(BareTripwire::kBase + 16) == 8);
  CHECK(metadata_nibble(t.mem, BareTripwire::kBase + 16) == BareTripwire::kReal);
  CHECK(read_metadata(t.mem, BareTripwire::kBase + 16, 8).access_count == 1);
  CHECK_FALSE(t.machine.has_trap(1));
  CHECK(t.detector.delegated_count() == 0);
  CHECK_THROWS_AS(t.detector.handle_trap(1, t.mem, t.allocator, t.machine), DetectorInvariantError);
}

TEST_CASE("a hit right before ret removes the tripwire permanently") {
  BareTripwire t;
  const Fault f = t.fault_at(1, BareTripwire::kBase + 16, 8);
  t.detector.handle_tag_mismatch(f, t.machine.program()[1], t.mem, t.allocator, t.machine);
  CHECK(t.machine.trap_count() == 0);
  CHECK(t.detector.stats().removed_by_ret_edge == 1);
  CHECK(t.mem.get_granule_tag(BareTripwire::kBase + 16) == BareTripwire::kReal);
  CHECK(metadata_nibble(t.mem, BareTripwire::kBase + 16) == BareTripwire::kReal);
}

TEST_CASE("overflowing tripwire accesses are reported as intra-granule") {
  BareTripwire t;
  const Fault f = t.fault_at(0, BareTripwire::kBase + 20, 8);  // bytes 4..11 of 8
  const HandlerAction act = t.detector.handle_tag_mismatch(f, t.machine.program()[0], t.mem,
                                                           t.allocator, t.machine);
  REQUIRE(act.kind == HandlerAction::Kind::Report);
  CHECK(act.report->kind == BugKind::IntraGranuleOverflow);
  CHECK(act.report->addressable_bytes == 8u);
  CHECK(act.report->accessed_bytes_in_granule == 12u);
  CHECK(act.report->fault_address == BareTripwire::kBase + 20);
}

TEST_CASE("overread_skip forgives flagged loads without the bounds check") {
  DetectorConfig c;
  c.overread_skip = true;
  BareTripwire t;
  t.detector = Detector(c);
  Instruction in = t.machine.program()[0];
  in.overread_ok = true;
  const Fault f = t.fault_at(0, BareTripwire::kBase + 20, 8);
  CHECK(t.detector.handle_tag_mismatch(f, in, t.mem, t.allocator, t.machine).kind ==
        HandlerAction::Kind::Resume);
}

TEST_CASE("classify distinguishes overflow, use-after-free and zero tags") {
  TaggedMemory mem;
  AllocatorConfig config;
  config.tripwires_enabled = false;
  config.odd_even = false;
  Allocator alloc(mem, config, SamplerConfig{}, Rng(4));
  const TaggedPointer a = alloc.allocate(32);
  const TaggedPointer b = alloc.allocate(32);
  const TaggedPointer c = alloc.allocate(32);
  REQUIRE(alloc.free(c).ok());
  CHECK(classify(a.tag(), b.tag(), 0, b.address(), alloc) == BugKind::CrossGranuleOverflow);
  CHECK(classify(c.tag(), mem.get_granule_tag(c.address()), 0, c.address(), alloc) ==
        BugKind::UseAfterFreeOrWild);
  CHECK(classify(0, 5, 0, 0x10, alloc) == BugKind::ZeroTag);
  CHECK(classify(5, 8, 5, b.address(), alloc) == BugKind::IntraGranuleOverflow);
}
