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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mtesim/allocator.h"
#include "mtesim/trace_io.h"
#include "oracles.h"

using namespace mtesim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string parse_error(std::string_view text) {
  try {
    parse_program(text);
  } catch (const TraceError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse the basic example") {
  const Program p = parse_program("alloc r0 40\nst r1 [r0, #8] w8 p1\nhalt");
  REQUIRE(p.size() == 3);
  CHECK(p[0].op == Opcode::AllocCall);
  CHECK(p[0].imm == 40);
  CHECK(p[1].op == Opcode::Store);
  CHECK(p[1].rt == 1);
  CHECK(p[1].base == 0);
  CHECK(p[1].imm == 8);
  CHECK(p[1].width == 8);
  CHECK(p[2].op == Opcode::Halt);
}

TEST_CASE("parse errors name the line") {
  CHECK(parse_error("ld r0 [r1, #0] w3 p1\nhalt") == "line 1: invalid width 3");
  CHECK(parse_error("mov r0 1\nfrob r1\nhalt") == "line 2: unknown mnemonic 'frob'");
  CHECK(parse_error("# header\n\nmov r32 1\nhalt") == "line 3: register out of range: r32");
  CHECK(parse_error("mov r0 1\n") == "line 1: program must end with halt");
  CHECK(parse_error("# nothing\n") == "line 2: program is empty");
  CHECK(parse_error("ld r31 [r0] w8 p2\nhalt").find("pair") != std::string::npos);
  CHECK(parse_error("ld r1 [r0] w8 p3\nhalt") == "line 1: invalid pair count 'p3'");
  CHECK(parse_error("ld r1 [r0] w8 p1 fast\nhalt") == "line 1: unknown access flag 'fast'");
  CHECK(parse_error("mov r1 0xZZ\nhalt") == "line 1: invalid immediate '0xZZ'");
}

TEST_CASE("syntax variants: comments, sp, register offsets, flags") {
  const Program p = parse_program(
      "  # comment line\n"
      "ld r2 [sp, #-16] w4 p2 atomic   # trailing comment\n"
      "st r3 [r1, r12] w16 p1 overread_ok\n"
      "add r4 r5 -3\n"
      "mov r6 0xFFFFFFFFFFFFFFFF\n"
      "syscall\nret\nhalt\n");
  CHECK(p[0].base == kStackPointer);
  CHECK(p[0].imm == -16);
  CHECK(p[0].pair == 2);
  CHECK(p[0].atomic);
  CHECK(p[1].offset_kind == OffsetKind::Reg);
  CHECK(p[1].offset_reg == 12);
  CHECK(p[1].overread_ok);
  CHECK(p[2].imm == -3);
  CHECK(static_cast<uint64_t>(p[3].imm) == ~0ULL);
  CHECK(p.lines[0] == 2);
  CHECK(render_instruction(p[0]) == "ld r2 [r31, #-16] w4 p2 atomic");
  CHECK(render_instruction(p[3]) == "mov r6 0xffffffffffffffff");
}

TEST_CASE("render/parse round trip over generated programs") {
  for (WorkloadKind kind : {WorkloadKind::IntraGranuleOverflow, WorkloadKind::CrossGranuleOverflow,
                            WorkloadKind::UseAfterFree, WorkloadKind::DoubleFree, WorkloadKind::Benign}) {
    WorkloadSpec spec;
    spec.kind = kind;
    spec.count = 100;
    spec.seed = 17;
    spec.sizes = uniform_sizes(1, 100);
    for (const auto& g : generate_workload(spec)) {
      const std::string text = render_program(g.program);
      const Program back = parse_program(text);
      REQUIRE(back == g.program);
      REQUIRE(render_program(back) == text);
      REQUIRE(parse_program(render_generated(g)) == g.program);
    }
  }
}

TEST_CASE("size-40 intra program stores 8 bytes at offset 36") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::IntraGranuleOverflow;
  spec.sizes = {{40, 1}};
  spec.count = 20;
  for (const auto& g : generate_workload(spec)) {
    REQUIRE(g.bug_pc);
    const Instruction& in = g.program[*g.bug_pc];
    CHECK(in.is_memory());
    CHECK(in.imm == 36);
    CHECK(in.width == 8);
    CHECK(g.target_size == 40);
  }
}

TEST_CASE("generated programs satisfy the exact-bounds oracle") {
  struct Case {
    WorkloadKind kind;
    oracle::Violation expect;
    CrossPlacement placement = CrossPlacement::Adjacent;
    unsigned reuse = 0;
  };
  const Case cases[] = {
      {WorkloadKind::IntraGranuleOverflow, oracle::Violation::OutOfBounds},
      {WorkloadKind::CrossGranuleOverflow, oracle::Violation::OutOfBounds},
      {WorkloadKind::CrossGranuleOverflow, oracle::Violation::OutOfBounds, CrossPlacement::Distant},
      {WorkloadKind::UseAfterFree, oracle::Violation::UseAfterFree},
      {WorkloadKind::UseAfterFree, oracle::Violation::UseAfterFree, CrossPlacement::Adjacent, 2},
      {WorkloadKind::DoubleFree, oracle::Violation::DoubleFree},
      {WorkloadKind::Benign, oracle::Violation::None},
  };
  for (const Case& c : cases) {
    WorkloadSpec spec;
    spec.kind = c.kind;
    spec.count = 300;
    spec.seed = 23;
    spec.sizes = uniform_sizes(1, 200);
    spec.placement = c.placement;
    spec.reuse_cycles = c.reuse;
    for (const auto& g : generate_workload(spec)) {
      const oracle::ProvenanceResult r = oracle::check_provenance(g.program);
      REQUIRE(r.violation == c.expect);
      if (c.expect == oracle::Violation::None) {
        CHECK_FALSE(g.bug_pc);
        continue;
      }
      REQUIRE(g.bug_pc);
      REQUIRE(r.pc == *g.bug_pc);
      const uint64_t usable = size_class(r.alloc_size);
      if (c.kind == WorkloadKind::IntraGranuleOverflow) {
        // Overruns the request but stays inside the last granule.
        CHECK(static_cast<uint64_t>(r.access_end) > r.alloc_size);
        CHECK(static_cast<uint64_t>(r.access_end) <= usable);
      }
      if (c.kind == WorkloadKind::CrossGranuleOverflow) {
        CHECK(static_cast<uint64_t>(r.access_end) > usable);
      }
    }
  }
}

TEST_CASE("benign size-24 programs never access past 24 bytes") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::Benign;
  spec.sizes = {{24, 1}};
  spec.count = 200;
  for (const auto& g : generate_workload(spec)) {
    REQUIRE(oracle::check_provenance(g.program).violation == oracle::Violation::None);
  }
}

TEST_CASE("workload spec validation") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::IntraGranuleOverflow;
  spec.sizes = {{32, 1}};
  CHECK_THROWS_AS(validate(spec), WorkloadSpecError);
  spec.sizes = {{24, 0}};
  CHECK_THROWS_AS(validate(spec), WorkloadSpecError);
  spec.sizes = {};
  CHECK_THROWS_AS(validate(spec), WorkloadSpecError);
  spec.sizes = {{24, 1}};
  spec.count = 0;
  CHECK_THROWS_AS(validate(spec), WorkloadSpecError);
  spec.count = 1;
  CHECK_NOTHROW(validate(spec));
}

TEST_CASE("size distribution text") {
  const auto d = parse_size_distribution("24:1,40:2.5,7");
  REQUIRE(d.size() == 3);
  CHECK(d[1] == SizeWeight{40, 2.5});
  CHECK(d[2] == SizeWeight{7, 1.0});
  CHECK(render_size_distribution(d) == "24:1.0,40:2.5,7:1.0");
  CHECK_THROWS_AS(parse_size_distribution("24:x"), WorkloadSpecError);
  CHECK_THROWS_AS(parse_size_distribution("a"), WorkloadSpecError);
}

TEST_CASE("program i depends only on seed and index") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::Benign;
  spec.seed = 7;
  spec.count = 5;
  const auto small = generate_workload(spec);
  spec.count = 50;
  const auto large = generate_workload(spec);
  for (size_t i = 0; i < small.size(); ++i) CHECK(small[i].program == large[i].program);
  spec.seed = 8;
  CHECK_FALSE(generate_workload(spec)[0].program == large[0].program);
}

TEST_CASE("benign sizes follow the distribution") {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::Benign;
  spec.sizes = {{24, 1}, {40, 1}};
  spec.count = 100;
  for (const auto& g : generate_workload(spec)) {
    for (const Instruction& in : g.program.code) {
      if (in.op == Opcode::AllocCall) REQUIRE((in.imm == 24 || in.imm == 40));
    }
  }
}

TEST_CASE("corpus layout, manifest, and byte-identical regeneration") {
  const auto dir = std::filesystem::temp_directory_path() / "mtesim_corpus_test";
  std::filesystem::remove_all(dir);
  WorkloadSpec spec;
  spec.kind = WorkloadKind::IntraGranuleOverflow;
  spec.count = 100;
  spec.seed = 7;
  write_corpus(dir / "a", spec, generate_workload(spec));
  write_corpus(dir / "b", spec, generate_workload(spec));
  size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "a" / "intra")) {
    CHECK(e.path().extension() == ".mtr");
    CHECK(slurp(e.path()) == slurp(dir / "b" / "intra" / e.path().filename()));
    ++files;
  }
  CHECK(files == 100);
  const auto manifest = nlohmann::ordered_json::parse(slurp(dir / "a" / "manifest.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : manifest.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"kind", "seed", "count", "size_distribution"});
  CHECK(manifest["kind"] == "intra");
  CHECK(manifest["count"] == 100);
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("workload kind names") {
  CHECK(parse_workload_kind("intra") == WorkloadKind::IntraGranuleOverflow);
  CHECK(parse_workload_kind("DoubleFree") == WorkloadKind::DoubleFree);
  CHECK_FALSE(parse_workload_kind("overflow"));
}
