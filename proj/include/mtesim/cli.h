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

#ifndef MTESIM_CLI_H_
#define MTESIM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace mtesim {

inline constexpr int kExitClean = 0;
inline constexpr int kExitBug = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `mtesim` binary. args excludes the program name.
// Returns 0 on a clean run, 1 when a bug is reported (or an experiment check
// fails), and 2 on usage, parse, or I/O errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtesim

#endif  // MTESIM_CLI_H_
