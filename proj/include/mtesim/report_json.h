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

#ifndef MTESIM_REPORT_JSON_H_
#define MTESIM_REPORT_JSON_H_

#include <string>

#include "json.hpp"
#include "mtesim/detector.h"
#include "mtesim/simulator.h"

namespace mtesim {

using OrderedJson = nlohmann::ordered_json;

// "0x" followed by 16 lowercase hex digits.
std::string hex64(uint64_t value);

// {kind, pc, fault_address, addrtag, memtag, addressable_bytes?,
//  accessed_bytes_in_granule?, regs[33]}; regs holds r0..r30, sp, then pc.
OrderedJson to_json(const BugReport& report);
OrderedJson to_json(const SimConfig& config);
OrderedJson to_json(const RunCounters& counters);
OrderedJson to_json(const RunReport& report);

}  // namespace mtesim

#endif  // MTESIM_REPORT_JSON_H_
