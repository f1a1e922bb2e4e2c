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

// Runtime scanner over simulator traces: watches keychain additions,
// installs and the system log for signs of cross-app hijacking.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xara/common.hpp"
#include "xara/simreg.hpp"

namespace xara::monitor {

enum class AlarmKind { kKeychainAclAnomaly, kSchemeConflict, kBidConflict, kNsNameContention };

std::string_view to_string(AlarmKind k);

struct Alarm {
  AlarmKind kind = AlarmKind::kKeychainAclAnomaly;
  std::vector<std::string> subjects;  // app ids
  std::string details;
  std::size_t event = 0;  // trace index of the triggering event

  bool operator==(const Alarm&) const = default;
};

// Expected keychain ACL member sets per app, from offline profiling.
struct AclProfile {
  std::map<std::string, std::vector<std::set<std::string>>> expected;

  bool empty() const { return expected.empty(); }
};

//   app com.google.Chrome
//     acl com.google.Chrome
//     acl com.google.Chrome,com.google.Chrome.helper
AclProfile parse_profiles(std::string_view text);

std::vector<Alarm> on_keychain_change(const sim::SysState& before, const sim::SysState& after,
                                      const AclProfile& profiles);

// `state` is the system right before `manifest`'s app gets installed.
std::vector<Alarm> on_install(const sim::SysState& state, const sim::AppManifest& manifest);

std::vector<Alarm> on_syslog(std::string_view entry);

std::vector<Alarm> watch_trace(const sim::Trace& trace, const AclProfile& profiles = {});

std::string render_alarms(const std::vector<Alarm>& alarms, Format format);

}  // namespace xara::monitor
