// Copyright 2026 The xara-scan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xara::cli {

// Exit codes shared by the subcommands.
inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFindings = 2;
inline constexpr int kExitAlarms = 3;

// `args` excludes the program name. Reports go to `out` unless --out names
// a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xara::cli
