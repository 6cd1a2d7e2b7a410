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

#include "mtesim/report_json.h"

#include <cstdio>

namespace mtesim {

std::string hex64(uint64_t value) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(value));
  return buf;
}

OrderedJson to_json(const BugReport& report) {
  OrderedJson j;
  j["kind"] = std::string(to_string(report.kind));
  j["pc"] = report.pc;
  j["fault_address"] = hex64(report.fault_address);
  j["addrtag"] = report.addrtag;
  j["memtag"] = report.memtag;
  if (report.addressable_bytes) j["addressable_bytes"] = *report.addressable_bytes;
  if (report.accessed_bytes_in_granule) {
    j["accessed_bytes_in_granule"] = *report.accessed_bytes_in_granule;
  }
  OrderedJson regs = OrderedJson::array();
  for (uint64_t r : report.regs) regs.push_back(hex64(r));
  regs.push_back(hex64(report.pc));
  j["regs"] = regs;
  return j;
}

OrderedJson to_json(const SimConfig& c) {
  OrderedJson j;
  j["mode"] = std::string(to_string(c.mode));
  j["seed"] = c.seed;
  j["tripwires"] = c.detector.tripwires_enabled;
  j["tripwires_active"] = c.tripwires_active();
  j["alloc_threshold"] = c.sampler.alloc_threshold;
  j["sampling_rate"] = c.sampler.sampling_rate;
  j["access_threshold"] = c.detector.access_threshold;
  j["overread_skip"] = c.detector.overread_skip;
  j["odd_even"] = c.allocator.odd_even;
  j["allow_zero_tag"] = c.allocator.allow_zero_tag;
  j["large_threshold"] = c.allocator.large_threshold;
  return j;
}

OrderedJson to_json(const RunCounters& c) {
  OrderedJson j;
  j["instructions_executed"] = c.instructions_executed;
  j["faults_delivered"] = c.faults_delivered;
  j["traps_delivered"] = c.traps_delivered;
  j["tripwires_armed"] = c.tripwires_armed;
  j["tripwires_removed_by_threshold"] = c.tripwires_removed_by_threshold;
  j["tripwires_removed_by_ret_edge"] = c.tripwires_removed_by_ret_edge;
  j["allocations"] = c.allocations;
  j["frees"] = c.frees;
  return j;
}

OrderedJson to_json(const RunReport& r) {
  OrderedJson j;
  j["outcome"] = r.outcome == RunReport::Outcome::CleanHalt ? "CleanHalt" : "BugReported";
  j["bug"] = r.bug ? to_json(*r.bug) : OrderedJson(nullptr);
  j["counters"] = to_json(r.counters);
  j["config"] = to_json(r.config);
  return j;
}

}  // namespace mtesim
