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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>

#include "xara/ir.hpp"
#include "xara/simreg.hpp"

namespace xara::sim {
namespace {

struct Token {
  std::string key;  // empty for positional tokens
  std::string value;
};

bool is_key(std::string_view w) {
  if (w.empty() || !(std::isalpha(static_cast<unsigned char>(w[0])) || w[0] == '_')) return false;
  return std::all_of(w.begin(), w.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

class LineParser {
 public:
  LineParser(std::string_view line, int lineno) : s_(line), lineno_(lineno) {}

  [[noreturn]] void fail(const std::string& m) const {
    throw SimError(SimError::Kind::kSyntax, static_cast<std::size_t>(lineno_),
                   "line " + std::to_string(lineno_) + ": " + m);
  }

  std::vector<Token> tokens() {
    std::vector<Token> out;
    while (true) {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ >= s_.size() || s_[i_] == '#') break;
      Token t;
      if (s_[i_] == '"') {
        t.value = quoted();
      } else {
        const std::size_t b = i_;
        while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '"')
          ++i_;
        std::string_view word = s_.substr(b, i_ - b);
        const auto eq = word.find('=');
        if (eq != std::string_view::npos && is_key(word.substr(0, eq))) {
          t.key = std::string(word.substr(0, eq));
          if (eq + 1 == word.size() && i_ < s_.size() && s_[i_] == '"') {
            t.value = quoted();
          } else {
            t.value = std::string(word.substr(eq + 1));
          }
        } else {
          if (i_ < s_.size() && s_[i_] == '"') fail("unexpected quote inside a word");
          t.value = std::string(word);
        }
      }
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::string quoted() {
    std::string v;
    ++i_;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated string literal");
      const char c = s_[i_++];
      if (c == '"') break;
      if (c != '\\') {
        v.push_back(c);
        continue;
      }
      if (i_ >= s_.size()) fail("unterminated escape");
      const char e = s_[i_++];
      switch (e) {
        case '"': v.push_back('"'); break;
        case '\\': v.push_back('\\'); break;
        case 'n': v.push_back('\n'); break;
        case 't': v.push_back('\t'); break;
        case 'r': v.push_back('\r'); break;
        case '0': v.push_back('\0'); break;
        case 'x': {
          unsigned x = 0;
          if (i_ + 2 > s_.size() ||
              std::from_chars(s_.data() + i_, s_.data() + i_ + 2, x, 16).ptr != s_.data() + i_ + 2)
            fail("bad \\x escape");
          v.push_back(static_cast<char>(x));
          i_ += 2;
          break;
        }
        default: fail(std::string("unknown escape '\\") + e + "'");
      }
    }
    if (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])))
      fail("string literal must be followed by whitespace");
    return v;
  }

  std::string_view s_;
  int lineno_;
  std::size_t i_ = 0;
};

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b <= v.size()) {
    const auto c = v.find(',', b);
    const std::string part = v.substr(b, c == std::string::npos ? std::string::npos : c - b);
    if (!part.empty()) out.push_back(part);
    if (c == std::string::npos) break;
    b = c + 1;
  }
  return out;
}

// Quoted unless the value survives the tokenizer as a bare word.
std::string word(std::string_view v) {
  const bool bare = !v.empty() && v[0] != '#' && std::all_of(v.begin(), v.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u > ' ' && u < 0x7f && c != '"' && c != '\\' && c != '=' && c != ',';
  });
  return bare ? std::string(v) : ir::quote(v);
}

std::string attrs_words(const Attributes& a) {
  std::string out;
  for (const auto& [k, v] : a) out += " " + k + "=" + word(v);
  return out;
}

std::string list_words(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out;
}

struct Command {
  std::string name;
  std::vector<std::string> pos;
  std::vector<Token> kv;
};

class EventBuilder {
 public:
  EventBuilder(const LineParser& lp, Command cmd) : lp_(lp), c_(std::move(cmd)) {}

  Event build() {
    const std::string& n = c_.name;
    if (n == "vet") return vet();
    if (n == "install") { positional(1); no_keys(); return ev::Install{c_.pos[0]}; }
    if (n == "uninstall") { positional(1); no_keys(); return ev::Uninstall{c_.pos[0]}; }
    if (n == "kc-create") {
      const auto handle = as_handle();
      positional(1);
      ev::KcCreate e{c_.pos[0], {}, {}, {}, handle};
      bool have_secret = false;
      for (const Token& t : c_.kv) {
        if (t.key == "secret") {
          e.secret = t.value;
          have_secret = true;
        } else if (t.key == "acl") {
          e.acl = acl(t.value);
        } else {
          attr(e.attrs, t);
        }
      }
      if (!have_secret) lp_.fail("kc-create needs secret=");
      return e;
    }
    if (n == "kc-find") {
      const auto handle = as_handle();
      positional(1);
      return ev::KcFind{c_.pos[0], attrs_only(), handle};
    }
    if (n == "kc-update") {
      positional(2);
      std::string secret;
      bool have = false;
      for (const Token& t : c_.kv) {
        if (t.key != "secret") lp_.fail("unknown key '" + t.key + "' for kc-update");
        secret = t.value;
        have = true;
      }
      if (!have) lp_.fail("kc-update needs secret=");
      return ev::KcUpdate{c_.pos[0], c_.pos[1], secret};
    }
    if (n == "kc-read") { positional(2); no_keys(); return ev::KcRead{c_.pos[0], c_.pos[1]}; }
    if (n == "kc-attrs") { positional(1); return ev::KcReadAttrs{c_.pos[0], attrs_only()}; }
    if (n == "kc-delete") { positional(1); return ev::KcDelete{c_.pos[0], attrs_only()}; }
    if (n == "ns-register") { positional(2); no_keys(); return ev::RegisterNsName{c_.pos[0], c_.pos[1]}; }
    if (n == "ns-connect") { positional(2); return ev::ConnectNsName{c_.pos[0], c_.pos[1], data()}; }
    if (n == "port-bind") { positional(2); no_keys(); return ev::BindPort{c_.pos[0], port(c_.pos[1])}; }
    if (n == "port-connect") {
      positional(2);
      return ev::ConnectPort{c_.pos[0], port(c_.pos[1]), data()};
    }
    if (n == "open-url") { positional(2); no_keys(); return ev::OpenUrl{c_.pos[0], c_.pos[1]}; }
    if (n == "cwrite") {
      positional(3);
      return ev::ContainerWrite{c_.pos[0], c_.pos[1], c_.pos[2], data()};
    }
    if (n == "cread") {
      positional(3);
      no_keys();
      return ev::ContainerRead{c_.pos[0], c_.pos[1], c_.pos[2]};
    }
    lp_.fail("unknown event '" + n + "'");
  }

 private:
  void positional(std::size_t n) const {
    if (c_.pos.size() != n)
      lp_.fail(c_.name + " takes " + std::to_string(n) + " positional argument" +
               (n == 1 ? "" : "s") + ", got " + std::to_string(c_.pos.size()));
  }

  void no_keys() const {
    if (!c_.kv.empty()) lp_.fail("unknown key '" + c_.kv.front().key + "' for " + c_.name);
  }

  std::optional<std::string> as_handle() {
    const auto it = std::find(c_.pos.begin(), c_.pos.end(), "as");
    if (it == c_.pos.end()) return std::nullopt;
    if (it + 2 != c_.pos.end()) lp_.fail("expected 'as <handle>' at the end of " + c_.name);
    std::string h = *(it + 1);
    c_.pos.erase(it, c_.pos.end());
    return h;
  }

  void attr(Attributes& a, const Token& t) const {
    if (!a.emplace(t.key, t.value).second) lp_.fail("duplicate attribute '" + t.key + "'");
  }

  Attributes attrs_only() const {
    Attributes a;
    for (const Token& t : c_.kv) {
      if (t.key == "secret" || t.key == "acl")
        lp_.fail("'" + t.key + "' is not an attribute of " + c_.name);
      attr(a, t);
    }
    return a;
  }

  std::string data() const {
    std::string d;
    for (const Token& t : c_.kv) {
      if (t.key != "data") lp_.fail("unknown key '" + t.key + "' for " + c_.name);
      d = t.value;
    }
    return d;
  }

  std::uint16_t port(const std::string& v) const {
    unsigned p = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), p);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || p == 0 || p > 65535)
      lp_.fail("bad port '" + v + "'");
    return static_cast<std::uint16_t>(p);
  }

  std::vector<AclEntry> acl(const std::string& v) const {
    std::vector<AclEntry> out;
    for (const auto& part : split_list(v)) {
      const auto colon = part.rfind(':');
      AclEntry e;
      e.app = part.substr(0, colon);
      const std::string perms = colon == std::string::npos ? "rw" : part.substr(colon + 1);
      if (e.app.empty() || perms.empty()) lp_.fail("bad acl entry '" + part + "'");
      for (const char c : perms == "-" ? std::string() : perms) {
        if (c == 'r') {
          e.read = true;
        } else if (c == 'w') {
          e.write = true;
        } else {
          lp_.fail("bad acl permission '" + perms + "'");
        }
      }
      out.push_back(e);
    }
    return out;
  }

  Event vet() const {
    positional(1);
    AppManifest m;
    m.app_id = c_.pos[0];
    bool have_team = false, have_bid = false;
    for (const Token& t : c_.kv) {
      if (t.key == "team") {
        m.team_id = t.value;
        have_team = true;
      } else if (t.key == "bid") {
        m.main_bid = t.value;
        have_bid = true;
      } else if (t.key == "sub") {
        m.sub_bids = split_list(t.value);
      } else if (t.key == "schemes") {
        m.schemes = split_list(t.value);
      } else if (t.key == "ent") {
        for (const auto& e : split_list(t.value)) {
          const auto ent = parse_entitlement(e);
          if (!ent) lp_.fail("unknown entitlement '" + e + "'");
          m.entitlements.insert(*ent);
        }
      } else {
        lp_.fail("unknown key '" + t.key + "' for vet");
      }
    }
    if (!have_team || !have_bid) lp_.fail("vet needs team= and bid=");
    return ev::VetApp{m};
  }

  const LineParser& lp_;
  Command c_;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::string to_string(const Event& e) {
  struct V {
    std::string operator()(const ev::VetApp& x) const {
      const AppManifest& m = x.manifest;
      std::string out = "vet " + word(m.app_id) + " team=" + word(m.team_id) + " bid=" + word(m.main_bid);
      if (!m.sub_bids.empty()) out += " sub=" + list_words(m.sub_bids);
      if (!m.schemes.empty()) out += " schemes=" + list_words(m.schemes);
      if (!m.entitlements.empty()) {
        std::vector<std::string> ents;
        for (const auto en : m.entitlements) ents.emplace_back(to_string(en));
        out += " ent=" + list_words(ents);
      }
      return out;
    }
    std::string operator()(const ev::Install& x) const { return "install " + word(x.app); }
    std::string operator()(const ev::Uninstall& x) const { return "uninstall " + word(x.app); }
    std::string operator()(const ev::KcCreate& x) const {
      std::string out = "kc-create " + word(x.app) + attrs_words(x.attrs);
      if (!x.acl.empty()) {
        std::string acl;
        for (const auto& a : x.acl)
          acl += (acl.empty() ? "" : ",") + a.app + ":" + (a.read || a.write ? "" : "-") + (a.read ? "r" : "") +
                 (a.write ? "w" : "");
        out += " acl=" + acl;
      }
      out += " secret=" + word(x.secret);
      if (x.handle) out += " as " + word(*x.handle);
      return out;
    }
    std::string operator()(const ev::KcFind& x) const {
      std::string out = "kc-find " + word(x.app) + attrs_words(x.attrs);
      if (x.handle) out += " as " + word(*x.handle);
      return out;
    }
    std::string operator()(const ev::KcUpdate& x) const {
      return "kc-update " + word(x.app) + " " + word(x.handle) + " secret=" + word(x.secret);
    }
    std::string operator()(const ev::KcDelete& x) const {
      return "kc-delete " + word(x.app) + attrs_words(x.attrs);
    }
    std::string operator()(const ev::KcReadAttrs& x) const {
      return "kc-attrs " + word(x.app) + attrs_words(x.attrs);
    }
    std::string operator()(const ev::KcRead& x) const {
      return "kc-read " + word(x.app) + " " + word(x.handle);
    }
    std::string operator()(const ev::RegisterNsName& x) const {
      return "ns-register " + word(x.app) + " " + word(x.name);
    }
    std::string operator()(const ev::ConnectNsName& x) const {
      std::string out = "ns-connect " + word(x.app) + " " + word(x.name);
      if (!x.data.empty()) out += " data=" + word(x.data);
      return out;
    }
    std::string operator()(const ev::BindPort& x) const {
      return "port-bind " + word(x.app) + " " + std::to_string(x.port);
    }
    std::string operator()(const ev::ConnectPort& x) const {
      std::string out = "port-connect " + word(x.app) + " " + std::to_string(x.port);
      if (!x.data.empty()) out += " data=" + word(x.data);
      return out;
    }
    std::string operator()(const ev::OpenUrl& x) const {
      return "open-url " + word(x.app) + " " + word(x.url);
    }
    std::string operator()(const ev::ContainerWrite& x) const {
      return "cwrite " + word(x.app) + " " + word(x.bid) + " " + word(x.path) + " data=" + word(x.bytes);
    }
    std::string operator()(const ev::ContainerRead& x) const {
      return "cread " + word(x.app) + " " + word(x.bid) + " " + word(x.path);
    }
  };
  return std::visit(V{}, e);
}

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  int lineno = 0;
  for (std::size_t b = 0; b <= text.size();) {
    const std::size_t e = std::min(text.find('\n', b), text.size());
    const std::string_view line = text.substr(b, e - b);
    b = e + 1;
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string_view body = trim(t.substr(1));
      if (body.rfind("platform:", 0) == 0) {
        const std::string_view v = trim(body.substr(9));
        const auto p = parse_platform(v);
        if (!p) {
          throw SimError(SimError::Kind::kSyntax, static_cast<std::size_t>(lineno),
                         "line " + std::to_string(lineno) + ": unknown platform '" +
                             std::string(v) + "'");
        }
        if (sc.platform && *sc.platform != *p) {
          throw SimError(SimError::Kind::kSyntax, static_cast<std::size_t>(lineno),
                         "line " + std::to_string(lineno) + ": conflicting platform headers");
        }
        sc.platform = p;
      }
      continue;
    }
    LineParser lp(line, lineno);
    auto tokens = lp.tokens();
    if (tokens.empty()) continue;
    if (!tokens[0].key.empty()) lp.fail("expected an event name");
    Command cmd;
    cmd.name = tokens[0].value;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (tokens[i].key.empty()) {
        if (!cmd.kv.empty() && tokens[i].value != "as" &&
            (i < 2 || tokens[i - 1].value != "as" || !tokens[i - 1].key.empty()))
          lp.fail("positional argument '" + tokens[i].value + "' after key=value");
        cmd.pos.push_back(tokens[i].value);
      } else {
        cmd.kv.push_back(tokens[i]);
      }
    }
    sc.events.push_back(EventBuilder(lp, std::move(cmd)).build());
    sc.lines.push_back(lineno);
    if (e >= text.size()) break;
  }
  return sc;
}

}  // namespace xara::sim
