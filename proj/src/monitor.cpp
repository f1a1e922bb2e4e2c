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

#include "xara/monitor.hpp"

#include <algorithm>
#include <sstream>

#include "nlohmann/json.hpp"

namespace xara::monitor {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out;
}

bool is_system(const sim::SysState& s, const std::string& app) {
  const sim::AppManifest* m = s.manifest(app);
  return m && m->is_system();
}

}  // namespace

std::string_view to_string(AlarmKind k) {
  switch (k) {
    case AlarmKind::kKeychainAclAnomaly: return "KeychainAclAnomaly";
    case AlarmKind::kSchemeConflict: return "SchemeConflict";
    case AlarmKind::kBidConflict: return "BidConflict";
    case AlarmKind::kNsNameContention: return "NsNameContention";
  }
  return "";
}

AclProfile parse_profiles(std::string_view text) {
  AclProfile p;
  std::string current;
  int lineno = 0;
  for (std::size_t b = 0; b <= text.size();) {
    const std::size_t e = std::min(text.find('\n', b), text.size());
    std::string_view line = text.substr(b, e - b);
    b = e + 1;
    ++lineno;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    auto fail = [&](const std::string& m) {
      throw Error("profiles:" + std::to_string(lineno) + ": " + m);
    };
    const bool indented = line[0] == ' ' || line[0] == '\t';
    const auto sp = t.find_first_of(" \t");
    const std::string_view key = t.substr(0, sp);
    const std::string_view rest = sp == std::string_view::npos ? "" : trim(t.substr(sp));
    if (!indented && key == "app") {
      if (rest.empty() || rest.find_first_of(" \t") != std::string_view::npos)
        fail("expected app <id>");
      current = std::string(rest);
      p.expected[current];
    } else if (indented && key == "acl") {
      if (current.empty()) fail("acl line outside an app block");
      std::set<std::string> members;
      std::size_t s = 0;
      while (s <= rest.size()) {
        const auto c = std::min(rest.find(',', s), rest.size());
        const std::string_view m = trim(rest.substr(s, c - s));
        if (m.empty()) fail("empty acl member");
        members.insert(std::string(m));
        s = c + 1;
      }
      p.expected[current].push_back(std::move(members));
    } else {
      fail("unknown line '" + std::string(t) + "'");
    }
  }
  for (const auto& [app, sets] : p.expected)
    if (sets.empty()) throw Error("profiles: app " + app + " has no acl sets");
  return p;
}

std::vector<Alarm> on_keychain_change(const sim::SysState& before, const sim::SysState& after,
                                      const AclProfile& profiles) {
  std::set<std::uint64_t> old;
  for (const auto& it : before.keychain) old.insert(it.id);
  std::vector<Alarm> out;
  for (const auto& it : after.keychain) {
    if (old.count(it.id)) continue;
    const std::set<std::string> apps = it.acl_apps();
    std::set<std::string> sys, third;
    for (const auto& a : apps) (is_system(after, a) ? sys : third).insert(a);
    const std::string item = "item " + std::to_string(it.id) + " created by " + it.creator;
    if (!sys.empty() && !third.empty()) {
      out.push_back({AlarmKind::kKeychainAclAnomaly,
                     {apps.begin(), apps.end()},
                     item + ": acl mixes system " + join(sys) + " with third-party " + join(third),
                     0});
      continue;
    }
    for (const auto& a : apps) {
      const auto prof = profiles.expected.find(a);
      if (prof == profiles.expected.end()) continue;
      if (std::find(prof->second.begin(), prof->second.end(), apps) != prof->second.end()) continue;
      out.push_back({AlarmKind::kKeychainAclAnomaly,
                     {apps.begin(), apps.end()},
                     item + ": acl {" + join(apps) + "} differs from the profile of " + a,
                     0});
      break;
    }
  }
  return out;
}

std::vector<Alarm> on_install(const sim::SysState& state, const sim::AppManifest& m) {
  std::vector<Alarm> out;
  if (state.installed.count(m.app_id)) return out;
  for (const auto& scheme : m.schemes) {
    const auto it = state.schemes.find(scheme);
    if (it == state.schemes.end() || it->second == m.app_id) continue;
    out.push_back({AlarmKind::kSchemeConflict,
                   {it->second, m.app_id},
                   "scheme " + scheme + " is owned by " + it->second + " and declared by " +
                       m.app_id,
                   0});
  }
  for (const auto& bid : m.all_bids()) {
    const auto it = state.containers.find(bid);
    if (it == state.containers.end()) continue;
    std::set<std::string> others = it->second.acl;
    others.erase(m.app_id);
    if (others.empty()) continue;
    std::vector<std::string> subjects(others.begin(), others.end());
    subjects.push_back(m.app_id);
    out.push_back({AlarmKind::kBidConflict, subjects,
                   "bundle id " + bid + " of " + m.app_id + " collides with the container of " +
                       join(others),
                   0});
  }
  return out;
}

std::vector<Alarm> on_syslog(std::string_view entry) {
  constexpr std::string_view kPrefix = "register-failed(";
  constexpr std::string_view kHeld = ") held-by ";
  if (entry.substr(0, kPrefix.size()) != kPrefix) return {};
  const auto close = entry.rfind(kHeld);
  if (close == std::string_view::npos) return {};
  const std::string_view inner = entry.substr(kPrefix.size(), close - kPrefix.size());
  const auto comma = inner.rfind(", ");
  if (comma == std::string_view::npos) return {};
  const std::string name(inner.substr(0, comma));
  const std::string app(inner.substr(comma + 2));
  const std::string owner(entry.substr(close + kHeld.size()));
  if (name.empty() || app.empty() || owner.empty()) return {};
  return {{AlarmKind::kNsNameContention,
           {app, owner},
           app + " failed to register " + name + " held by " + owner,
           0}};
}

std::vector<Alarm> watch_trace(const sim::Trace& trace, const AclProfile& profiles) {
  std::vector<Alarm> out;
  for (std::size_t i = 0; i < trace.entries.size(); ++i) {
    const sim::TraceEntry& e = trace.entries[i];
    const sim::SysState& before = trace.before(i);
    std::vector<Alarm> found;
    if (const auto* ins = std::get_if<sim::ev::Install>(&e.event);
        ins && e.outcome.kind == sim::Outcome::Kind::kOk) {
      if (const sim::AppManifest* m = before.manifest(ins->app)) {
        auto a = on_install(before, *m);
        found.insert(found.end(), a.begin(), a.end());
      }
    }
    if (before.keychain != e.state.keychain) {
      auto a = on_keychain_change(before, e.state, profiles);
      found.insert(found.end(), a.begin(), a.end());
    }
    for (std::size_t l = before.syslog.size(); l < e.state.syslog.size(); ++l) {
      auto a = on_syslog(e.state.syslog[l]);
      found.insert(found.end(), a.begin(), a.end());
    }
    for (auto& a : found) {
      a.event = e.index;
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::string render_alarms(const std::vector<Alarm>& alarms, Format format) {
  if (format == Format::kJson) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& a : alarms) {
      j.push_back({{"kind", std::string(to_string(a.kind))},
                   {"subjects", a.subjects},
                   {"details", a.details},
                   {"event", a.event}});
    }
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "alarms " << alarms.size() << '\n';
  for (const auto& a : alarms) {
    os << "  [" << a.event << "] " << to_string(a.kind) << " subjects=";
    for (std::size_t i = 0; i < a.subjects.size(); ++i) os << (i ? "," : "") << a.subjects[i];
    os << ": " << a.details << '\n';
  }
  return os.str();
}

}  // namespace xara::monitor
