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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xara {

enum class Platform { kOsx, kIos };

std::string_view to_string(Platform p);
std::optional<Platform> parse_platform(std::string_view s);

enum class Verdict { kVulnerable, kSafe, kInformational, kNotApplicable };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

enum class Format { kText, kJson };

std::string_view to_string(Format f);
std::optional<Format> parse_format(std::string_view s);

// Base of every structured error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xara
