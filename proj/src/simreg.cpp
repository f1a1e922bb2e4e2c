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

#include "xara/simreg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "nlohmann/json.hpp"
#include "xara/ir.hpp"
#include "xara/rules.hpp"

namespace xara::sim {
namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw SimError(SimError::Kind::kMalformedEvent, 0, what);
}

bool valid_bid(std::string_view bid) {
  if (bid.empty()) return false;
  std::size_t seg = 0;
  for (const char c : bid) {
    if (c == '.') {
      if (seg == 0) return false;
      seg = 0;
    } else if (static_cast<unsigned char>(c) <= ' ' || c == '/') {
      return false;
    } else {
      ++seg;
    }
  }
  return seg > 0;
}

bool is_reserved_scheme(std::string_view s) {
  const auto& r = reserved_schemes();
  return std::find(r.begin(), r.end(), s) != r.end();
}

bool subset_of(const Attributes& want, const Attributes& have) {
  for (const auto& [k, v] : want) {
    const auto it = have.find(k);
    if (it == have.end() || it->second != v) return false;
  }
  return true;
}

std::string attrs_text(const Attributes& a) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : a) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + v;
  }
  return out + "}";
}

void recompute_scheme(SysState& s, const std::string& scheme) {
  const auto it = s.scheme_history.find(scheme);
  if (it == s.scheme_history.end() || it->second.empty()) {
    if (it != s.scheme_history.end()) s.scheme_history.erase(it);
    s.schemes.erase(scheme);
    return;
  }
  s.schemes[scheme] = s.platform == Platform::kOsx ? it->second.front() : it->second.back();
}

// Visitor over events; returns the outcome and mutates `s` on success.
struct Applier {
  SysState& s;
  const SysState& before;

  const AppManifest& installed(const std::string& app, Outcome& fail) {
    static const AppManifest kNone;
    const AppManifest* m = s.manifest(app);
    if (!m || !s.installed.count(app)) {
      fail = Outcome::denied("not-installed");
      return kNone;
    }
    return *m;
  }

  KeychainItem* live_item(const std::string& handle, Outcome& fail) {
    const auto h = s.handles.find(handle);
    if (h == s.handles.end()) malformed("unknown handle '" + handle + "'");
    for (auto& it : s.keychain)
      if (it.id == h->second) return &it;
    fail = Outcome::denied("stale-handle");
    return nullptr;
  }

  Outcome operator()(const ev::VetApp& e) {
    const Outcome o = vet_app(s, e.manifest);
    if (o.kind == Outcome::Kind::kOk) s.store.push_back(e.manifest);
    return o;
  }

  Outcome operator()(const ev::Install& e) {
    const AppManifest* m = s.manifest(e.app);
    if (!m) return Outcome::denied("not-vetted");
    const AppManifest man = *m;
    const bool re = s.installed.count(e.app) > 0;
    s.installed.insert(e.app);
    for (const auto& bid : man.all_bids()) s.containers[bid].acl.insert(e.app);
    for (const auto& scheme : man.schemes) {
      if (is_reserved_scheme(scheme)) {
        if (!man.is_system() || s.schemes.count(scheme)) continue;
        s.scheme_history[scheme].push_back(e.app);
        s.schemes[scheme] = e.app;
        continue;
      }
      auto& h = s.scheme_history[scheme];
      const auto pos = std::find(h.begin(), h.end(), e.app);
      if (s.platform == Platform::kIos) {
        if (pos != h.end()) h.erase(pos);
        h.push_back(e.app);
      } else if (pos == h.end()) {
        h.push_back(e.app);
      }
      recompute_scheme(s, scheme);
    }
    return Outcome::ok(std::string(re ? "reinstalled " : "installed ") + e.app);
  }

  Outcome operator()(const ev::Uninstall& e) {
    if (!s.installed.count(e.app)) return Outcome::denied("not-installed");
    s.installed.erase(e.app);
    for (auto it = s.containers.begin(); it != s.containers.end();) {
      it->second.acl.erase(e.app);
      if (it->second.acl.empty()) {
        it = s.containers.erase(it);
      } else {
        ++it;
      }
    }
    std::erase_if(s.ns_names, [&](const auto& kv) { return kv.second == e.app; });
    std::erase_if(s.ports, [&](const auto& kv) { return kv.second == e.app; });
    std::vector<std::string> touched;
    for (auto& [scheme, h] : s.scheme_history) {
      const auto n = std::erase(h, e.app);
      if (n) touched.push_back(scheme);
    }
    for (const auto& scheme : touched) recompute_scheme(s, scheme);
    return Outcome::ok("uninstalled " + e.app);
  }

  Outcome operator()(const ev::KcCreate& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.attrs.empty()) malformed("kc-create needs at least one attribute");
    for (const auto& it : s.keychain) {
      if (it.attributes == e.attrs)
        return Outcome::conflict("item " + std::to_string(it.id) + " has identical attributes");
    }
    KeychainItem item;
    item.id = s.next_item++;
    item.attributes = e.attrs;
    item.secret = e.secret;
    item.creator = e.app;
    for (const AclEntry& a : e.acl) {
      if (a.app.empty()) malformed("empty app id in acl");
      auto found = std::find_if(item.acl.begin(), item.acl.end(),
                                [&](const AclEntry& x) { return x.app == a.app; });
      if (found == item.acl.end()) {
        item.acl.push_back(a);
      } else {
        found->read = found->read || a.read;
        found->write = found->write || a.write;
      }
    }
    auto self = std::find_if(item.acl.begin(), item.acl.end(),
                             [&](const AclEntry& x) { return x.app == e.app; });
    if (self == item.acl.end()) {
      item.acl.insert(item.acl.begin(), AclEntry{e.app, true, true});
    } else {
      self->read = self->write = true;
    }
    if (e.handle) s.handles[*e.handle] = item.id;
    s.keychain.push_back(std::move(item));
    return Outcome::ok("item " + std::to_string(s.keychain.back().id));
  }

  Outcome operator()(const ev::KcFind& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.attrs.empty()) malformed("kc-find needs at least one attribute");
    for (const auto& it : s.keychain) {
      if (!subset_of(e.attrs, it.attributes)) continue;
      if (e.handle) s.handles[*e.handle] = it.id;
      return Outcome::ok("item " + std::to_string(it.id));
    }
    return Outcome::denied("item-not-found");
  }

  Outcome operator()(const ev::KcUpdate& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    KeychainItem* it = live_item(e.handle, fail);
    if (!it) return fail;
    if (!it->can_write(e.app)) return Outcome::denied("acl-write");
    it->secret = e.secret;
    return Outcome::ok("item " + std::to_string(it->id) + " updated");
  }

  Outcome operator()(const ev::KcDelete& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.attrs.empty()) malformed("kc-delete needs at least one attribute");
    std::string ids;
    for (const auto& it : s.keychain) {
      if (!subset_of(e.attrs, it.attributes)) continue;
      ids += (ids.empty() ? "" : ",") + std::to_string(it.id);
    }
    if (ids.empty()) return Outcome::denied("item-not-found");
    std::erase_if(s.keychain, [&](const KeychainItem& it) { return subset_of(e.attrs, it.attributes); });
    return Outcome::ok("deleted item " + ids);
  }

  Outcome operator()(const ev::KcReadAttrs& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    std::string out;
    for (const auto& it : s.keychain) {
      if (!subset_of(e.attrs, it.attributes)) continue;
      if (!out.empty()) out += "; ";
      out += "item " + std::to_string(it.id) + " " + attrs_text(it.attributes);
    }
    if (out.empty()) return Outcome::denied("item-not-found");
    return Outcome::ok(out);
  }

  Outcome operator()(const ev::KcRead& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    const KeychainItem* it = live_item(e.handle, fail);
    if (!it) return fail;
    if (!it->can_read(e.app)) return Outcome::denied("acl-read");
    s.inbox[e.app].push_back({"keychain", "item " + std::to_string(it->id), it->secret});
    return Outcome::ok(it->secret);
  }

  Outcome operator()(const ev::RegisterNsName& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.name.empty()) malformed("empty NSConnection name");
    const auto it = s.ns_names.find(e.name);
    if (it != s.ns_names.end() && it->second != e.app) {
      const std::string owner = it->second;
      // Only the log survives a conflict.
      s = before;
      s.syslog.push_back("register-failed(" + e.name + ", " + e.app + ") held-by " + owner);
      return Outcome::conflict(e.name + " held by " + owner);
    }
    s.ns_names[e.name] = e.app;
    return Outcome::ok("registered " + e.name);
  }

  Outcome operator()(const ev::ConnectNsName& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    const auto it = s.ns_names.find(e.name);
    if (it == s.ns_names.end()) return Outcome::denied("no-such-name");
    const std::string owner = it->second;
    s.inbox[owner].push_back({"ns", e.app, e.data});
    return Outcome::ok("routed to " + owner);
  }

  Outcome operator()(const ev::BindPort& e) {
    Outcome fail;
    const AppManifest& m = installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.port == 0) malformed("port 0");
    if (!m.entitlements.count(Entitlement::kNetwork)) return Outcome::denied("entitlement-network");
    const auto it = s.ports.find(e.port);
    if (it != s.ports.end() && it->second != e.app)
      return Outcome::conflict("port " + std::to_string(e.port) + " held by " + it->second);
    s.ports[e.port] = e.app;
    return Outcome::ok("bound " + std::to_string(e.port));
  }

  Outcome operator()(const ev::ConnectPort& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.port == 0) malformed("port 0");
    const auto it = s.ports.find(e.port);
    if (it == s.ports.end()) return Outcome::denied("no-listener");
    const std::string owner = it->second;
    s.inbox[owner].push_back({"port", e.app, e.data});
    return Outcome::ok("routed to " + owner);
  }

  Outcome operator()(const ev::OpenUrl& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    const auto scheme = rules::url_scheme(e.url, reserved_schemes());
    if (!scheme) malformed("url without a scheme: " + e.url);
    const auto it = s.schemes.find(*scheme);
    if (it == s.schemes.end()) return Outcome::denied("no-handler");
    const std::string owner = it->second;
    s.inbox[owner].push_back({"url", e.app, e.url});
    return Outcome::ok("routed to " + owner);
  }

  Outcome operator()(const ev::ContainerWrite& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    if (e.path.empty()) malformed("empty container path");
    const auto it = s.containers.find(e.bid);
    if (it == s.containers.end()) return Outcome::denied("no-container");
    if (!it->second.acl.count(e.app)) return Outcome::denied("container-acl");
    it->second.files[e.path] = e.bytes;
    return Outcome::ok("wrote " + e.bid + "/" + e.path);
  }

  Outcome operator()(const ev::ContainerRead& e) {
    Outcome fail;
    installed(e.app, fail);
    if (fail.kind != Outcome::Kind::kOk) return fail;
    const auto it = s.containers.find(e.bid);
    if (it == s.containers.end()) return Outcome::denied("no-container");
    if (!it->second.acl.count(e.app)) return Outcome::denied("container-acl");
    const auto f = it->second.files.find(e.path);
    if (f == it->second.files.end()) return Outcome::denied("no-such-file");
    const std::string bytes = f->second;
    s.inbox[e.app].push_back({"container", e.bid + "/" + e.path, bytes});
    return Outcome::ok(bytes);
  }
};

void put(std::ostringstream& os, std::string_view key, std::string_view value) {
  os << key << ' ' << ir::quote(value) << '\n';
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string_view to_string(Entitlement e) {
  return e == Entitlement::kNetwork ? "network" : "ipc-client";
}

std::optional<Entitlement> parse_entitlement(std::string_view s) {
  if (s == "network") return Entitlement::kNetwork;
  if (s == "ipc-client") return Entitlement::kIpcClient;
  return std::nullopt;
}

std::vector<std::string> AppManifest::all_bids() const {
  std::vector<std::string> out{main_bid};
  for (const auto& b : sub_bids)
    if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  return out;
}

std::set<std::string> KeychainItem::acl_apps() const {
  std::set<std::string> out;
  for (const auto& a : acl) out.insert(a.app);
  return out;
}

bool KeychainItem::can_read(std::string_view app) const {
  return std::any_of(acl.begin(), acl.end(), [&](const AclEntry& a) { return a.app == app && a.read; });
}

bool KeychainItem::can_write(std::string_view app) const {
  return std::any_of(acl.begin(), acl.end(), [&](const AclEntry& a) { return a.app == app && a.write; });
}

const AppManifest* SysState::manifest(std::string_view app) const {
  for (const auto& m : store)
    if (m.app_id == app) return &m;
  return nullptr;
}

const KeychainItem* SysState::item(std::uint64_t id) const {
  for (const auto& it : keychain)
    if (it.id == id) return &it;
  return nullptr;
}

SysState empty_state(Platform platform) {
  SysState s;
  s.platform = platform;
  return s;
}

const std::vector<std::string>& reserved_schemes() {
  static const std::vector<std::string> kReserved{"mailto", "tel", "facetime", "sms", "http", "https"};
  return kReserved;
}

const std::string& actor(const Event& e) {
  return std::visit(
      [](const auto& x) -> const std::string& {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ev::VetApp>) {
          return x.manifest.app_id;
        } else {
          return x.app;
        }
      },
      e);
}

std::string_view to_string(Outcome::Kind k) {
  switch (k) {
    case Outcome::Kind::kOk: return "ok";
    case Outcome::Kind::kDenied: return "denied";
    case Outcome::Kind::kConflict: return "conflict";
  }
  return "";
}

std::string to_string(const Outcome& o) {
  switch (o.kind) {
    case Outcome::Kind::kOk: return o.detail.empty() ? "ok" : "ok: " + o.detail;
    case Outcome::Kind::kDenied: return "denied(" + o.detail + ")";
    case Outcome::Kind::kConflict: return "conflict: " + o.detail;
  }
  return "";
}

SimError::SimError(Kind kind, std::size_t position, const std::string& what)
    : Error(what), kind_(kind), position_(position) {}

Outcome vet_app(const SysState& state, const AppManifest& m) {
  if (m.app_id.empty()) malformed("manifest without an app id");
  for (const auto& bid : m.all_bids())
    if (!valid_bid(bid)) malformed("malformed bundle id '" + bid + "'");
  if (state.manifest(m.app_id)) return Outcome::denied("duplicate-app");
  if (!m.is_system()) {
    for (const auto& bid : m.all_bids())
      if (bid.rfind("com.apple", 0) == 0) return Outcome::denied("reserved-prefix");
  }
  for (const auto& other : state.store)
    if (other.main_bid == m.main_bid) return Outcome::denied("duplicate-bid");
  return Outcome::ok("accepted " + m.app_id);
}

Applied apply(const SysState& state, const Event& event) {
  Applied out{state, {}};
  Applier a{out.state, state};
  out.outcome = std::visit(a, event);
  if (out.outcome.kind != Outcome::Kind::kOk && out.state.syslog == state.syslog) out.state = state;
  return out;
}

std::string serialize(const SysState& s) {
  std::ostringstream os;
  os << "platform " << to_string(s.platform) << '\n';
  for (const auto& m : s.store) {
    put(os, "app", m.app_id);
    put(os, " team", m.team_id);
    put(os, " bid", m.main_bid);
    for (const auto& b : m.sub_bids) put(os, " sub", b);
    for (const auto& sc : m.schemes) put(os, " scheme", sc);
    for (const auto e : m.entitlements) put(os, " ent", to_string(e));
  }
  for (const auto& a : s.installed) put(os, "installed", a);
  os << "next-item " << s.next_item << '\n';
  for (const auto& it : s.keychain) {
    os << "item " << it.id << '\n';
    put(os, " creator", it.creator);
    for (const auto& [k, v] : it.attributes) os << " attr " << ir::quote(k) << ' ' << ir::quote(v) << '\n';
    put(os, " secret", it.secret);
    for (const auto& a : it.acl)
      os << " acl " << ir::quote(a.app) << ' ' << (a.read ? 'r' : '-') << (a.write ? 'w' : '-') << '\n';
  }
  for (const auto& [bid, c] : s.containers) {
    put(os, "container", bid);
    for (const auto& a : c.acl) put(os, " member", a);
    for (const auto& [p, b] : c.files) os << " file " << ir::quote(p) << ' ' << ir::quote(b) << '\n';
  }
  for (const auto& [sc, owner] : s.schemes) os << "scheme " << ir::quote(sc) << ' ' << ir::quote(owner) << '\n';
  for (const auto& [sc, h] : s.scheme_history) {
    put(os, "history", sc);
    for (const auto& a : h) put(os, " by", a);
  }
  for (const auto& [n, owner] : s.ns_names) os << "ns " << ir::quote(n) << ' ' << ir::quote(owner) << '\n';
  for (const auto& [p, owner] : s.ports) os << "port " << p << ' ' << ir::quote(owner) << '\n';
  for (const auto& [h, id] : s.handles) os << "handle " << ir::quote(h) << ' ' << id << '\n';
  for (const auto& l : s.syslog) put(os, "log", l);
  for (const auto& [app, ds] : s.inbox) {
    put(os, "inbox", app);
    for (const auto& d : ds)
      os << ' ' << d.channel << ' ' << ir::quote(d.from) << ' ' << ir::quote(d.payload) << '\n';
  }
  return os.str();
}

std::uint64_t digest(const SysState& state) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : serialize(state)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

const SysState& Trace::before(std::size_t i) const {
  return i == 0 ? initial_ : entries.at(i - 1).state;
}

const SysState& Trace::final_state() const {
  return entries.empty() ? initial_ : entries.back().state;
}

Trace run_scenario(const std::vector<Event>& events, Platform platform,
                   const std::vector<int>& lines) {
  Trace t;
  t.platform = platform;
  t.initial_ = empty_state(platform);
  const SysState* cur = &t.initial_;
  t.entries.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const int line = i < lines.size() ? lines[i] : 0;
    try {
      Applied a = apply(*cur, events[i]);
      TraceEntry e{i, line, events[i], std::move(a.outcome), 0, std::move(a.state)};
      e.digest = digest(e.state);
      t.entries.push_back(std::move(e));
      cur = &t.entries.back().state;
    } catch (const SimError& err) {
      std::string where = "event " + std::to_string(i);
      if (line > 0) where += " (line " + std::to_string(line) + ")";
      throw SimError(SimError::Kind::kMalformedEvent, i, where + ": " + err.what());
    }
  }
  return t;
}

std::string render_trace(const Trace& trace, Format format) {
  const SysState& fin = trace.final_state();
  if (format == Format::kJson) {
    nlohmann::json j;
    j["platform"] = std::string(to_string(trace.platform));
    j["entries"] = nlohmann::json::array();
    for (const auto& e : trace.entries) {
      j["entries"].push_back({{"index", e.index},
                              {"line", e.line},
                              {"event", to_string(e.event)},
                              {"outcome", {{"kind", std::string(to_string(e.outcome.kind))},
                                           {"detail", e.outcome.detail}}},
                              {"digest", hex64(e.digest)}});
    }
    nlohmann::json final_state;
    final_state["digest"] = hex64(digest(fin));
    final_state["schemes"] = fin.schemes;
    final_state["ns_names"] = fin.ns_names;
    nlohmann::json ports = nlohmann::json::object();
    for (const auto& [p, o] : fin.ports) ports[std::to_string(p)] = o;
    final_state["ports"] = ports;
    final_state["syslog"] = fin.syslog;
    nlohmann::json inbox = nlohmann::json::object();
    for (const auto& [app, ds] : fin.inbox) {
      for (const auto& d : ds)
        inbox[app].push_back({{"channel", d.channel}, {"from", d.from}, {"payload", d.payload}});
    }
    final_state["inbox"] = inbox;
    j["final"] = final_state;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "trace platform=" << to_string(trace.platform) << " events=" << trace.entries.size() << '\n';
  for (const auto& e : trace.entries) {
    os << "  [" << e.index << "] " << to_string(e.event) << " -> " << to_string(e.outcome)
       << "  #" << hex64(e.digest) << '\n';
  }
  os << "final digest=" << hex64(digest(fin)) << '\n';
  for (const auto& [sc, o] : fin.schemes) os << "  scheme " << sc << " -> " << o << '\n';
  for (const auto& [n, o] : fin.ns_names) os << "  ns " << n << " -> " << o << '\n';
  for (const auto& [p, o] : fin.ports) os << "  port " << p << " -> " << o << '\n';
  for (const auto& l : fin.syslog) os << "  log " << l << '\n';
  for (const auto& [app, ds] : fin.inbox) {
    for (const auto& d : ds)
      os << "  inbox " << app << " <- " << d.channel << " from " << d.from << ": "
         << ir::quote(d.payload) << '\n';
  }
  return os.str();
}

}  // namespace xara::sim
