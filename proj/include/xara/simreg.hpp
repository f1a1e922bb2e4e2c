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

// A deterministic model of the OS registries that sandboxed apps share:
// keychain, containers, URL schemes, NSConnection names and TCP ports,
// plus the store's vetting step. States are values; apply() returns a new
// one and never mutates its input.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xara/common.hpp"

namespace xara::sim {

inline constexpr std::string_view kSystemTeam = "apple-system";

enum class Entitlement { kNetwork, kIpcClient };

std::string_view to_string(Entitlement e);
std::optional<Entitlement> parse_entitlement(std::string_view s);

struct AppManifest {
  std::string app_id;
  std::string team_id;
  std::string main_bid;
  std::vector<std::string> sub_bids;
  std::vector<std::string> schemes;
  std::set<Entitlement> entitlements;

  bool is_system() const { return team_id == kSystemTeam; }
  std::vector<std::string> all_bids() const;
  bool operator==(const AppManifest&) const = default;
};

struct AclEntry {
  std::string app;
  bool read = false;
  bool write = false;

  bool operator==(const AclEntry&) const = default;
};

using Attributes = std::map<std::string, std::string>;

struct KeychainItem {
  std::uint64_t id = 0;
  Attributes attributes;
  std::string secret;
  std::vector<AclEntry> acl;
  std::string creator;

  std::set<std::string> acl_apps() const;
  bool can_read(std::string_view app) const;
  bool can_write(std::string_view app) const;
  bool operator==(const KeychainItem&) const = default;
};

struct Container {
  std::set<std::string> acl;
  std::map<std::string, std::string> files;

  bool operator==(const Container&) const = default;
};

// Data delivered to an app by the system: routed URLs, IPC payloads,
// container and keychain reads.
struct Delivery {
  std::string channel;  // url | ns | port | container | keychain
  std::string from;
  std::string payload;

  bool operator==(const Delivery&) const = default;
};

struct SysState {
  Platform platform = Platform::kOsx;
  std::vector<AppManifest> store;
  std::set<std::string> installed;
  std::vector<KeychainItem> keychain;
  std::uint64_t next_item = 1;
  std::map<std::string, Container> containers;
  std::map<std::string, std::string> schemes;
  // Registration order of installed declarers, oldest first.
  std::map<std::string, std::vector<std::string>> scheme_history;
  std::map<std::string, std::string> ns_names;
  std::map<std::uint16_t, std::string> ports;
  std::map<std::string, std::uint64_t> handles;  // scenario handle -> item id
  std::vector<std::string> syslog;
  std::map<std::string, std::vector<Delivery>> inbox;

  const AppManifest* manifest(std::string_view app) const;
  const KeychainItem* item(std::uint64_t id) const;
  bool operator==(const SysState&) const = default;
};

SysState empty_state(Platform platform);

// Schemes that only system apps may register and that are never reassigned.
const std::vector<std::string>& reserved_schemes();

namespace ev {
struct VetApp {
  AppManifest manifest;
  bool operator==(const VetApp&) const = default;
};
struct Install {
  std::string app;
  bool operator==(const Install&) const = default;
};
struct Uninstall {
  std::string app;
  bool operator==(const Uninstall&) const = default;
};
struct KcCreate {
  std::string app;
  Attributes attrs;
  std::string secret;
  std::vector<AclEntry> acl;
  std::optional<std::string> handle;
  bool operator==(const KcCreate&) const = default;
};
struct KcFind {
  std::string app; Attributes attrs; std::optional<std::string> handle;
  bool operator==(const KcFind&) const = default;
};
struct KcUpdate {
  std::string app; std::string handle; std::string secret;
  bool operator==(const KcUpdate&) const = default;
};
struct KcDelete {
  std::string app; Attributes attrs;
  bool operator==(const KcDelete&) const = default;
};
struct KcReadAttrs {
  std::string app; Attributes attrs;
  bool operator==(const KcReadAttrs&) const = default;
};
struct KcRead {
  std::string app; std::string handle;
  bool operator==(const KcRead&) const = default;
};
struct RegisterNsName {
  std::string app; std::string name;
  bool operator==(const RegisterNsName&) const = default;
};
struct ConnectNsName {
  std::string app; std::string name; std::string data;
  bool operator==(const ConnectNsName&) const = default;
};
struct BindPort {
  std::string app; std::uint16_t port = 0;
  bool operator==(const BindPort&) const = default;
};
struct ConnectPort {
  std::string app; std::uint16_t port = 0; std::string data;
  bool operator==(const ConnectPort&) const = default;
};
struct OpenUrl {
  std::string app; std::string url;
  bool operator==(const OpenUrl&) const = default;
};
struct ContainerWrite {
  std::string app; std::string bid; std::string path; std::string bytes;
  bool operator==(const ContainerWrite&) const = default;
};
struct ContainerRead {
  std::string app; std::string bid; std::string path;
  bool operator==(const ContainerRead&) const = default;
};
}  // namespace ev

using Event = std::variant<ev::VetApp, ev::Install, ev::Uninstall, ev::KcCreate, ev::KcFind,
                           ev::KcUpdate, ev::KcDelete, ev::KcReadAttrs, ev::KcRead,
                           ev::RegisterNsName, ev::ConnectNsName, ev::BindPort, ev::ConnectPort,
                           ev::OpenUrl, ev::ContainerWrite, ev::ContainerRead>;

// The acting app of an event (the vetted app for VetApp).
const std::string& actor(const Event& e);

// Scenario-language form of an event.
std::string to_string(const Event& e);

struct Outcome {
  enum class Kind { kOk, kDenied, kConflict };
  Kind kind = Kind::kOk;
  std::string detail;  // payload, violated policy, or conflict details

  static Outcome ok(std::string d = {}) { return {Kind::kOk, std::move(d)}; }
  static Outcome denied(std::string policy) { return {Kind::kDenied, std::move(policy)}; }
  static Outcome conflict(std::string d) { return {Kind::kConflict, std::move(d)}; }
  bool operator==(const Outcome&) const = default;
};

std::string_view to_string(Outcome::Kind k);
std::string to_string(const Outcome& o);

class SimError : public Error {
 public:
  enum class Kind { kMalformedEvent, kSyntax };
  SimError(Kind kind, std::size_t position, const std::string& what);
  Kind kind() const { return kind_; }
  // Event index (MalformedEvent) or 1-based line (Syntax).
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

Outcome vet_app(const SysState& state, const AppManifest& manifest);

struct Applied {
  SysState state;
  Outcome outcome;
};

// Throws SimError(kMalformedEvent) for events that cannot be interpreted
// against `state` (unknown handle, empty attribute map, bad BID syntax).
Applied apply(const SysState& state, const Event& event);

// FNV-1a over the canonical serialization of the state.
std::uint64_t digest(const SysState& state);
std::string serialize(const SysState& state);

struct TraceEntry {
  std::size_t index = 0;
  int line = 0;  // scenario line, 0 when built programmatically
  Event event;
  Outcome outcome;
  std::uint64_t digest = 0;
  SysState state;  // after the event
};

struct Trace {
  Platform platform = Platform::kOsx;
  std::vector<TraceEntry> entries;

  // State before entry i.
  const SysState& before(std::size_t i) const;
  const SysState& final_state() const;

 private:
  friend Trace run_scenario(const std::vector<Event>&, Platform, const std::vector<int>&);
  SysState initial_;
};

// Aborts with SimError carrying the failing event's index.
Trace run_scenario(const std::vector<Event>& events, Platform platform,
                   const std::vector<int>& lines = {});

struct Scenario {
  std::optional<Platform> platform;  // from a `# platform:` header
  std::vector<Event> events;
  std::vector<int> lines;
};

Scenario parse_scenario(std::string_view text);

std::string render_trace(const Trace& trace, Format format);

}  // namespace xara::sim
