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
#include "mtesim/report_json.h"
#include "mtesim/trace_io.h"

using namespace mtesim;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(MTESIM_TEST_DIR) / "golden";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> keys(const OrderedJson& j) {
  std::vector<std::string> out;
  for (const auto& [k, v] : j.items()) out.push_back(k);
  return out;
}

}  // namespace

TEST_CASE("hex64 formatting") {
  CHECK(hex64(0) == "0x0000000000000000");
  CHECK(hex64(0x0A00000010000040ULL) == "0x0a00000010000040");
}

TEST_CASE("canonical rendering matches the golden file") {
  CHECK(render_program(read_program_file(kGolden / "canonical.mtr")) ==
        slurp(kGolden / "canonical.expected"));
}

TEST_CASE("RunReport JSON has a fixed field order") {
  SimConfig c;
  c.seed = 1;
  const RunReport r = run_program(read_program_file(kGolden / "intra.mtr"), c);
  const OrderedJson j = to_json(r);
  CHECK(keys(j) == std::vector<std::string>{"outcome", "bug", "counters", "config"});
  CHECK(keys(j["bug"]) == std::vector<std::string>{"kind", "pc", "fault_address", "addrtag", "memtag",
                                                   "addressable_bytes", "accessed_bytes_in_granule",
                                                   "regs"});
  CHECK(j["bug"]["regs"].size() == 33);
  CHECK(j["bug"]["regs"][32] == hex64(3));
  CHECK(keys(j["counters"]) ==
        std::vector<std::string>{"instructions_executed", "faults_delivered", "traps_delivered",
                                 "tripwires_armed", "tripwires_removed_by_threshold",
                                 "tripwires_removed_by_ret_edge", "allocations", "frees"});
  CHECK(j["config"]["seed"] == 1);
}

TEST_CASE("RunReport JSON matches the golden snapshot") {
  SimConfig c;
  c.seed = 1;
  const RunReport r = run_program(read_program_file(kGolden / "intra.mtr"), c);
  CHECK(to_json(r).dump(2) + "\n" == slurp(kGolden / "intra_report.json"));

  SimConfig no_tw = c;
  no_tw.detector.tripwires_enabled = false;
  const OrderedJson clean = to_json(run_program(read_program_file(kGolden / "intra.mtr"), no_tw));
  CHECK(clean["outcome"] == "CleanHalt");
  CHECK(clean["bug"].is_null());
}
