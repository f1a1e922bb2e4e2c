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

// Declarative per-channel fingerprints: which APIs claim a shared resource,
// which use it, which authenticate the other party, and which derive a new
// object from the claimed reference.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xara/common.hpp"

namespace xara::rules {

enum class ChannelId {
  kKeychain,
  kNsConnectionClient,
  kNsConnectionServer,
  kWebSocketServer,
  kScheme,
  kBid,
};

std::string_view to_string(ChannelId id);
std::optional<ChannelId> parse_channel(std::string_view s);
const std::array<ChannelId, 6>& all_channels();

enum class ApiKind { kCSymbol, kObjcSelector, kUrlLiteral };

std::string_view to_string(ApiKind k);

// Where the channel reference sits relative to a call.
//
// For objc-selector signatures `arg(k)` names the k-th method argument,
// i.e. raw argument position k + 2 of the objc_msgSend call. `outparam`
// without an index means the highest-numbered ArgAddr binding at the site.
struct Binding {
  enum class Kind { kReturnValue, kOutParam, kArg, kReceiver, kAny, kNone, kDest };
  Kind kind = Kind::kReturnValue;
  std::optional<int> index;

  static Binding return_value() { return {Kind::kReturnValue, std::nullopt}; }
  static Binding outparam(std::optional<int> i = std::nullopt) { return {Kind::kOutParam, i}; }
  static Binding arg(int i) { return {Kind::kArg, i}; }
  static Binding receiver() { return {Kind::kReceiver, std::nullopt}; }
  static Binding any() { return {Kind::kAny, std::nullopt}; }
  static Binding none() { return {Kind::kNone, std::nullopt}; }
  static Binding dest() { return {Kind::kDest, std::nullopt}; }

  bool operator==(const Binding&) const = default;
};

std::string to_string(const Binding& b);
std::optional<Binding> parse_binding(std::string_view s);

enum class CarrierReq { kAny, kReference, kDerived };

struct ApiSig {
  ApiKind kind = ApiKind::kCSymbol;
  std::string name;  // "*" matches every call (use signatures only)
  Binding ref;
  std::optional<Binding> from;         // derive input
  CarrierReq carrier = CarrierReq::kAny;  // auth: which carrier tag must reach `ref`
  std::optional<std::string> literal;  // auth: some argument must be this string literal

  bool operator==(const ApiSig&) const = default;
};

enum class AuthMode { kAny, kAll };

struct ChannelRule {
  ChannelId id = ChannelId::kKeychain;
  std::vector<ApiSig> claims;
  std::vector<ApiSig> uses;
  std::vector<ApiSig> auths;
  std::vector<ApiSig> derives;
  std::map<Platform, bool> platform_auth_available{{Platform::kOsx, true},
                                                   {Platform::kIos, true}};
  AuthMode auth_mode = AuthMode::kAny;
  Verdict no_auth_verdict = Verdict::kVulnerable;
  // When set, every claim is reported with this verdict regardless of uses.
  std::optional<Verdict> claim_verdict;
  std::vector<std::string> reserved_names;

  bool auth_available(Platform p) const;
  bool operator==(const ChannelRule&) const = default;
};

struct RuleSet {
  std::string version;
  std::map<ChannelId, ChannelRule> rules;

  const ChannelRule* find(ChannelId id) const;
  bool operator==(const RuleSet&) const = default;
};

class RuleError : public Error {
 public:
  enum class Kind { kSchema, kDuplicateChannel, kBadBinding };

  RuleError(Kind kind, std::string source, int line, const std::string& what);

  Kind kind() const { return kind_; }
  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  std::string source_;
  int line_;
};

// The fingerprints transcribed from the Xavus flaw-detection rules.
const RuleSet& builtin_rules();

// Parses a `# xara-rules: 1` file. `source` is only used in diagnostics.
RuleSet load_rules(std::string_view text, std::string_view source = "<rules>");

// Canonical text form; load_rules(save_rules(r)) == r.
std::string save_rules(const RuleSet& rules);

// Throws RuleError on invariant violations (line 0).
void validate(const RuleSet& rules);

// Keyword-prefix match: rule "openURL:" matches "openURL:options:".
bool selector_matches(std::string_view rule_name, std::string_view selector);

// Scheme of a URL literal: `<scheme>://...`, or `<scheme>:...` when the
// scheme is one of `reserved`. Lower-cased.
std::optional<std::string> url_scheme(std::string_view literal,
                                      const std::vector<std::string>& reserved = {});

// objc_msgSend and its Super/stret/fpret variants.
bool is_objc_dispatch(std::string_view symbol);

}  // namespace xara::rules
