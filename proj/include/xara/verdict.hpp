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

// The detection pipeline over a NAIF listing: find claim sites, follow the
// claimed reference to its uses, check authentication on the way, and emit
// one Finding per claim.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xara/common.hpp"
#include "xara/dataflow.hpp"
#include "xara/ir.hpp"
#include "xara/rules.hpp"

namespace xara::verdict {

enum class AuthStatus { kMissing, kPresentAllPaths, kPresentSomePaths, kNotApplicable };

std::string_view to_string(AuthStatus s);
std::optional<AuthStatus> parse_auth_status(std::string_view s);

struct UseSite {
  std::string procedure;
  std::size_t index = 0;
  std::string api;

  bool operator==(const UseSite&) const = default;
};

struct Evidence {
  std::string procedure;
  std::size_t index = 0;
  std::string explanation;

  bool operator==(const Evidence&) const = default;
};

struct Finding {
  rules::ChannelId channel = rules::ChannelId::kKeychain;
  dataflow::RefSite claim;
  std::string claim_api;
  std::vector<UseSite> uses;
  AuthStatus auth_status = AuthStatus::kMissing;
  Verdict verdict = Verdict::kVulnerable;
  Platform platform = Platform::kOsx;
  std::vector<Evidence> evidence;  // claim first, then by procedure and index
  std::vector<std::string> notes;

  bool operator==(const Finding&) const = default;
};

struct ChannelCounts {
  std::size_t vulnerable = 0;
  std::size_t safe = 0;
  std::size_t informational = 0;
  std::size_t not_applicable = 0;

  std::size_t& operator[](Verdict v);
  std::size_t total() const { return vulnerable + safe + informational + not_applicable; }
  bool operator==(const ChannelCounts&) const = default;
};

struct Report {
  std::string source;
  Platform platform = Platform::kOsx;
  std::string ruleset_version;
  std::vector<Finding> findings;  // by procedure, claim index, channel
  std::map<rules::ChannelId, ChannelCounts> summary;  // every channel, zero-filled

  bool has_vulnerable() const;
  bool operator==(const Report&) const = default;
};

class AnalysisError : public Error {
 public:
  AnalysisError(std::string procedure, const std::string& what)
      : Error(procedure + ": " + what), procedure_(std::move(procedure)) {}
  const std::string& procedure() const { return procedure_; }

 private:
  std::string procedure_;
};

// Inter-procedural descent stops after this many nested calls.
inline constexpr int kMaxCallDepth = 3;

Report analyze(const ir::Listing& listing, const rules::RuleSet& rules, Platform platform);

// Recomputes the per-channel tallies from the findings.
std::map<rules::ChannelId, ChannelCounts> summarize(const std::vector<Finding>& findings);

std::string render_report(const Report& report, Format format);

// Inverse of render_report(r, Format::kJson).
Report report_from_json(std::string_view text);

}  // namespace xara::verdict
