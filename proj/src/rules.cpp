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

#include "xara/rules.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "xara/ir.hpp"

namespace xara {

std::string_view to_string(Platform p) { return p == Platform::kOsx ? "osx" : "ios"; }

std::optional<Platform> parse_platform(std::string_view s) {
  if (s == "osx") return Platform::kOsx;
  if (s == "ios") return Platform::kIos;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kVulnerable: return "vulnerable";
    case Verdict::kSafe: return "safe";
    case Verdict::kInformational: return "informational";
    case Verdict::kNotApplicable: return "not-applicable";
  }
  return "unknown";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  for (const Verdict v : {Verdict::kVulnerable, Verdict::kSafe, Verdict::kInformational,
                          Verdict::kNotApplicable}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(Format f) { return f == Format::kJson ? "json" : "text"; }

std::optional<Format> parse_format(std::string_view s) {
  if (s == "text") return Format::kText;
  if (s == "json") return Format::kJson;
  return std::nullopt;
}

}  // namespace xara

namespace xara::rules {
namespace {

constexpr std::string_view kHeader = "# xara-rules: 1";

using EKind = RuleError::Kind;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Token {
  std::string key;    // empty for positional tokens
  std::string value;
  bool quoted = false;
};

// Splits a rule line into positional words, quoted strings and key=value
// pairs. `#` outside quotes ends the line.
std::vector<Token> tokenize(std::string_view line, const std::string& source, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& m) { throw RuleError(EKind::kSchema, source, lineno, m); };
  auto read_quoted = [&]() {
    std::string v;
    ++i;
    while (true) {
      if (i >= line.size()) fail("unterminated string literal");
      const char c = line[i++];
      if (c == '"') break;
      if (c == '\\') {
        if (i >= line.size()) fail("unterminated escape");
        const char e = line[i++];
        switch (e) {
          case '"': v.push_back('"'); break;
          case '\\': v.push_back('\\'); break;
          case 'n': v.push_back('\n'); break;
          case 't': v.push_back('\t'); break;
          case 'r': v.push_back('\r'); break;
          case 'x': {
            unsigned x = 0;
            if (i + 2 > line.size() ||
                std::from_chars(line.data() + i, line.data() + i + 2, x, 16).ptr !=
                    line.data() + i + 2)
              fail("bad \\x escape");
            v.push_back(static_cast<char>(x));
            i += 2;
            break;
          }
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else {
        v.push_back(c);
      }
    }
    return v;
  };
  while (true) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '#') break;
    Token t;
    if (line[i] == '"') {
      t.value = read_quoted();
      t.quoted = true;
    } else {
      const std::size_t b = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
             line[i] != '"' && line[i] != '=' && line[i] != '#')
        ++i;
      std::string word(line.substr(b, i - b));
      if (i < line.size() && line[i] == '=') {
        ++i;
        t.key = std::move(word);
        if (t.key.empty()) fail("missing key before '='");
        if (i < line.size() && line[i] == '"') {
          t.value = read_quoted();
          t.quoted = true;
        } else {
          const std::size_t vb = i;
          while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
                 line[i] != '#')
            ++i;
          t.value = std::string(line.substr(vb, i - vb));
        }
      } else {
        t.value = std::move(word);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::optional<ApiKind> parse_kind(std::string_view s) {
  if (s == "c-symbol") return ApiKind::kCSymbol;
  if (s == "objc-selector") return ApiKind::kObjcSelector;
  if (s == "url-literal") return ApiKind::kUrlLiteral;
  return std::nullopt;
}

std::string_view to_string(CarrierReq c) {
  switch (c) {
    case CarrierReq::kAny: return "any";
    case CarrierReq::kReference: return "reference";
    case CarrierReq::kDerived: return "derived";
  }
  return "any";
}

std::optional<CarrierReq> parse_carrier(std::string_view s) {
  for (const CarrierReq c : {CarrierReq::kAny, CarrierReq::kReference, CarrierReq::kDerived})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum class Role { kClaim, kUse, kAuth, kDerive };

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kClaim: return "claim";
    case Role::kUse: return "use";
    case Role::kAuth: return "auth";
    case Role::kDerive: return "derive";
  }
  return "";
}

// Returns an error message, or empty when the signature is valid for `role`.
// Name problems are schema errors; everything check_sig reports is a binding error.
std::string check_name(const ApiSig& sig, Role role) {
  const std::string where = std::string(to_string(role)) + " \"" + sig.name + "\": ";
  if (sig.name.empty()) return where + "empty API name";
  if (sig.name == "*" && role != Role::kUse && sig.kind != ApiKind::kUrlLiteral)
    return where + "wildcard names are only valid for uses";
  return {};
}

std::string check_sig(const ApiSig& sig, Role role) {
  using K = Binding::Kind;
  const std::string where = std::string(to_string(role)) + " \"" + sig.name + "\": ";
  if (sig.ref.index && (*sig.ref.index < 0 || *sig.ref.index > ir::kMaxArgIndex))
    return where + "binding index out of range";
  if (sig.ref.kind == K::kReceiver && sig.kind != ApiKind::kObjcSelector)
    return where + "receiver binding requires an objc-selector";
  if ((sig.kind == ApiKind::kUrlLiteral) != (sig.ref.kind == K::kDest))
    return where + "url-literal claims bind exactly ref=dest";
  if (sig.kind == ApiKind::kUrlLiteral && role != Role::kClaim)
    return where + "url-literal is only valid for claims";
  switch (role) {
    case Role::kClaim:
      if (sig.ref.kind == K::kAny || sig.ref.kind == K::kNone)
        return where + "claims must bind a concrete reference";
      break;
    case Role::kUse:
      if (sig.ref.kind == K::kReturnValue || sig.ref.kind == K::kNone)
        return where + "uses bind the argument that carries the reference";
      break;
    case Role::kAuth:
      if (sig.ref.kind == K::kReturnValue)
        return where + "auths bind the argument that carries the reference";
      break;
    case Role::kDerive:
      if (sig.ref.kind != K::kReturnValue && sig.ref.kind != K::kOutParam)
        return where + "derive output must be return-value or outparam";
      if (sig.from) {
        if (sig.from->kind != K::kArg && sig.from->kind != K::kReceiver)
          return where + "derive input must be arg(k) or receiver";
        if (sig.from->kind == K::kReceiver && sig.kind != ApiKind::kObjcSelector)
          return where + "receiver binding requires an objc-selector";
        if (sig.from->index && (*sig.from->index < 0 || *sig.from->index > ir::kMaxArgIndex))
          return where + "binding index out of range";
      }
      break;
  }
  return {};
}

std::string sig_line(std::string_view role, const ApiSig& sig) {
  std::string out = "  " + std::string(role) + " " + std::string(to_string(sig.kind)) + " " +
                    ir::quote(sig.name) + " ref=" + to_string(sig.ref);
  if (sig.from) out += " from=" + to_string(*sig.from);
  if (sig.carrier != CarrierReq::kAny) out += " carrier=" + std::string(to_string(sig.carrier));
  if (sig.literal) out += " literal=" + ir::quote(*sig.literal);
  out += '\n';
  return out;
}

ApiSig csym(std::string name, Binding ref) {
  return {ApiKind::kCSymbol, std::move(name), ref, std::nullopt, CarrierReq::kAny, std::nullopt};
}
ApiSig objc(std::string name, Binding ref) {
  return {ApiKind::kObjcSelector, std::move(name), ref, std::nullopt, CarrierReq::kAny,
          std::nullopt};
}

std::vector<std::string> keywords(std::string_view sel) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b < sel.size()) {
    const auto c = sel.find(':', b);
    if (c == std::string_view::npos) {
      out.emplace_back(sel.substr(b));
      break;
    }
    out.emplace_back(sel.substr(b, c - b));
    b = c + 1;
  }
  return out;
}

}  // namespace

RuleError::RuleError(Kind kind, std::string source, int line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " +
            (kind == Kind::kSchema              ? "SchemaError"
             : kind == Kind::kDuplicateChannel ? "DuplicateChannel"
                                               : "BadBinding") +
            ": " + what),
      kind_(kind),
      source_(std::move(source)),
      line_(line) {}

std::string_view to_string(ChannelId id) {
  switch (id) {
    case ChannelId::kKeychain: return "keychain";
    case ChannelId::kNsConnectionClient: return "nsconnection-client";
    case ChannelId::kNsConnectionServer: return "nsconnection-server";
    case ChannelId::kWebSocketServer: return "websocket-server";
    case ChannelId::kScheme: return "scheme";
    case ChannelId::kBid: return "bid";
  }
  return "unknown";
}

const std::array<ChannelId, 6>& all_channels() {
  static constexpr std::array<ChannelId, 6> kAll{
      ChannelId::kKeychain,        ChannelId::kNsConnectionClient, ChannelId::kNsConnectionServer,
      ChannelId::kWebSocketServer, ChannelId::kScheme,             ChannelId::kBid};
  return kAll;
}

std::optional<ChannelId> parse_channel(std::string_view s) {
  for (const ChannelId id : all_channels())
    if (to_string(id) == s) return id;
  return std::nullopt;
}

std::string_view to_string(ApiKind k) {
  switch (k) {
    case ApiKind::kCSymbol: return "c-symbol";
    case ApiKind::kObjcSelector: return "objc-selector";
    case ApiKind::kUrlLiteral: return "url-literal";
  }
  return "";
}

std::string to_string(const Binding& b) {
  using K = Binding::Kind;
  switch (b.kind) {
    case K::kReturnValue: return "return-value";
    case K::kOutParam: return "outparam(" + (b.index ? std::to_string(*b.index) : "last") + ")";
    case K::kArg: return "arg(" + std::to_string(b.index.value_or(0)) + ")";
    case K::kReceiver: return "receiver";
    case K::kAny: return "any";
    case K::kNone: return "none";
    case K::kDest: return "dest";
  }
  return "";
}

std::optional<Binding> parse_binding(std::string_view s) {
  if (s == "return-value") return Binding::return_value();
  if (s == "receiver") return Binding::receiver();
  if (s == "any") return Binding::any();
  if (s == "none") return Binding::none();
  if (s == "dest") return Binding::dest();
  if (s == "outparam") return Binding::outparam();
  auto indexed = [&](std::string_view prefix) -> std::optional<std::optional<int>> {
    if (s.size() <= prefix.size() + 1 || s.substr(0, prefix.size()) != prefix ||
        s[prefix.size()] != '(' || s.back() != ')')
      return std::nullopt;
    const std::string_view inner = s.substr(prefix.size() + 1, s.size() - prefix.size() - 2);
    if (inner == "last") return std::optional<int>{};
    int v = 0;
    const auto r = std::from_chars(inner.data(), inner.data() + inner.size(), v);
    if (r.ec != std::errc{} || r.ptr != inner.data() + inner.size()) return std::nullopt;
    return std::optional<int>{v};
  };
  if (const auto i = indexed("outparam")) return Binding::outparam(*i);
  if (const auto i = indexed("arg")) {
    if (!*i) return std::nullopt;
    return Binding::arg(**i);
  }
  return std::nullopt;
}

bool ChannelRule::auth_available(Platform p) const {
  const auto it = platform_auth_available.find(p);
  return it == platform_auth_available.end() || it->second;
}

const ChannelRule* RuleSet::find(ChannelId id) const {
  const auto it = rules.find(id);
  return it == rules.end() ? nullptr : &it->second;
}

bool selector_matches(std::string_view rule_name, std::string_view selector) {
  if (rule_name.empty()) return false;
  if (rule_name == selector) return true;
  const auto rk = keywords(rule_name);
  const auto sk = keywords(selector);
  if (rk.size() > sk.size()) return false;
  // A bare rule name (no colon) only matches exactly.
  if (rule_name.find(':') == std::string_view::npos) return false;
  return std::equal(rk.begin(), rk.end(), sk.begin());
}

bool is_objc_dispatch(std::string_view symbol) {
  return symbol.substr(0, 12) == "objc_msgSend";
}

std::optional<std::string> url_scheme(std::string_view literal,
                                      const std::vector<std::string>& reserved) {
  if (literal.empty() || !std::isalpha(static_cast<unsigned char>(literal[0]))) return std::nullopt;
  std::size_t i = 1;
  while (i < literal.size()) {
    const unsigned char c = static_cast<unsigned char>(literal[i]);
    if (std::isalnum(c) || c == '+' || c == '-' || c == '.') {
      ++i;
    } else {
      break;
    }
  }
  if (i >= literal.size() || literal[i] != ':') return std::nullopt;
  std::string scheme(literal.substr(0, i));
  std::transform(scheme.begin(), scheme.end(), scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (literal.substr(i, 3) == "://") return scheme;
  if (std::find(reserved.begin(), reserved.end(), scheme) != reserved.end()) return scheme;
  return std::nullopt;
}

namespace {

RuleSet make_builtin_rules() {
  RuleSet rs;
  rs.version = "builtin-1";

  ChannelRule kc;
  kc.id = ChannelId::kKeychain;
  kc.claims = {csym("SecKeychainFindGenericPassword", Binding::outparam()),
               csym("SecKeychainFindInternetPassword", Binding::outparam())};
  kc.uses = {csym("SecKeychainItemModifyAttributesAndData", Binding::arg(0)),
             csym("SecKeychainItemModifyContent", Binding::arg(0))};
  ApiSig copy_access = csym("SecKeychainItemCopyAccess", Binding::outparam());
  copy_access.from = Binding::arg(0);
  kc.derives = {copy_access};
  ApiSig acl = csym("SecACLCopyContents", Binding::arg(0));
  acl.carrier = CarrierReq::kDerived;
  kc.auths = {acl};
  rs.rules[kc.id] = kc;

  ChannelRule client;
  client.id = ChannelId::kNsConnectionClient;
  client.claims = {objc("rootProxyForConnectionWithRegisteredName:", Binding::return_value()),
                   objc("connectionWithRegisteredName:", Binding::return_value())};
  client.uses = {csym("*", Binding::any())};
  client.platform_auth_available = {{Platform::kOsx, false}, {Platform::kIos, false}};
  client.no_auth_verdict = Verdict::kVulnerable;
  rs.rules[client.id] = client;

  ChannelRule server;
  server.id = ChannelId::kNsConnectionServer;
  server.claims = {objc("serviceConnectionWithName:", Binding::return_value())};
  server.claim_verdict = Verdict::kInformational;
  rs.rules[server.id] = server;

  ChannelRule ws;
  ws.id = ChannelId::kWebSocketServer;
  ws.claims = {objc("<websocket-receiver>", Binding::return_value())};
  ws.uses = {objc("<websocket-response>", Binding::any())};
  ApiSig origin = objc("<websocket-header-field>", Binding::receiver());
  origin.literal = "Origin";
  ws.auths = {origin, csym("SecCodeCheckValidity", Binding::none())};
  ws.auth_mode = AuthMode::kAll;
  rs.rules[ws.id] = ws;

  ChannelRule scheme;
  scheme.id = ChannelId::kScheme;
  scheme.claims = {{ApiKind::kUrlLiteral, "*", Binding::dest(), std::nullopt, CarrierReq::kAny,
                    std::nullopt},
                   objc("decidePolicyForMIMEType:request:", Binding::return_value()),
                   objc("decidePolicyForNavigationAction:request:", Binding::return_value()),
                   objc("decidePolicyForNewWindowAction:request:", Binding::return_value()),
                   objc("willPerformClientRedirectToURL:", Binding::return_value())};
  scheme.uses = {objc("openURL:", Binding::arg(0)),
                 objc("openURLs:withAppBundleID:", Binding::arg(0))};
  scheme.auths = {objc("URLForApplicationToOpenURL:", Binding::arg(0)),
                  csym("LSCopyDefaultHandlerForURLScheme", Binding::arg(0))};
  scheme.platform_auth_available = {{Platform::kOsx, true}, {Platform::kIos, false}};
  scheme.reserved_names = {"mailto", "tel", "facetime", "sms", "http", "https"};
  rs.rules[scheme.id] = scheme;

  ChannelRule bid;
  bid.id = ChannelId::kBid;
  bid.claims = {csym("NSHomeDirectory", Binding::return_value())};
  bid.claim_verdict = Verdict::kInformational;
  rs.rules[bid.id] = bid;
  return rs;
}

}  // namespace

const RuleSet& builtin_rules() {
  static const RuleSet rs = make_builtin_rules();
  return rs;
}

void validate(const RuleSet& rules) {
  for (const auto& [id, rule] : rules.rules) {
    if (rule.id != id)
      throw RuleError(EKind::kSchema, "<ruleset>", 0, "channel key/id mismatch");
    if (rule.claims.empty() && id != ChannelId::kBid)
      throw RuleError(EKind::kSchema, "<ruleset>", 0,
                      "channel " + std::string(to_string(id)) + " has no claims");
    for (const auto& [role, sigs] :
         {std::pair{Role::kClaim, &rule.claims}, std::pair{Role::kUse, &rule.uses},
          std::pair{Role::kAuth, &rule.auths}, std::pair{Role::kDerive, &rule.derives}}) {
      for (const auto& sig : *sigs) {
        if (const std::string err = check_name(sig, role); !err.empty())
          throw RuleError(EKind::kSchema, "<ruleset>", 0, err);
        const std::string err = check_sig(sig, role);
        if (!err.empty()) throw RuleError(EKind::kBadBinding, "<ruleset>", 0, err);
      }
    }
    for (const auto& r : rule.reserved_names)
      if (r.empty()) throw RuleError(EKind::kSchema, "<ruleset>", 0, "empty reserved name");
  }
}

RuleSet load_rules(std::string_view text, std::string_view source_view) {
  const std::string source(source_view);
  RuleSet rs;

  std::vector<std::string_view> lines;
  for (std::size_t b = 0; b <= text.size();) {
    const std::size_t e = text.find('\n', b);
    if (e == std::string_view::npos) {
      lines.push_back(text.substr(b));
      break;
    }
    lines.push_back(text.substr(b, e - b));
    b = e + 1;
  }
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) return rs;
  if (trim(lines[first]) != kHeader) {
    throw RuleError(EKind::kSchema, source, static_cast<int>(first) + 1,
                    "missing '# xara-rules: 1' header");
  }

  ChannelRule* current = nullptr;
  int current_line = 0;
  bool have_version = false;
  auto close_channel = [&]() {
    if (current && current->claims.empty() && current->id != ChannelId::kBid) {
      throw RuleError(EKind::kSchema, source, current_line,
                      "channel " + std::string(to_string(current->id)) + " has no claims");
    }
    current = nullptr;
  };

  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const std::string_view raw = lines[li];
    auto tokens = tokenize(raw, source, lineno);
    if (tokens.empty()) continue;
    auto fail = [&](EKind k, const std::string& m) { throw RuleError(k, source, lineno, m); };
    const bool indented = raw[0] == ' ' || raw[0] == '\t';
    const Token& head = tokens[0];
    if (!head.key.empty() || head.quoted) fail(EKind::kSchema, "expected a keyword");

    if (!indented) {
      close_channel();
      if (head.value == "ruleset") {
        if (tokens.size() != 2 || !tokens[1].key.empty())
          fail(EKind::kSchema, "expected ruleset \"<tag>\"");
        if (have_version) fail(EKind::kSchema, "duplicate ruleset line");
        rs.version = tokens[1].value;
        have_version = true;
      } else if (head.value == "channel") {
        if (tokens.size() != 2 || !tokens[1].key.empty() || tokens[1].quoted)
          fail(EKind::kSchema, "expected channel <id>");
        const auto id = parse_channel(tokens[1].value);
        if (!id) fail(EKind::kSchema, "unknown channel '" + tokens[1].value + "'");
        if (rs.rules.count(*id))
          fail(EKind::kDuplicateChannel, "channel " + tokens[1].value + " defined twice");
        ChannelRule rule;
        rule.id = *id;
        current = &(rs.rules[*id] = std::move(rule));
        current_line = lineno;
      } else {
        fail(EKind::kSchema, "unknown top-level key '" + head.value + "'");
      }
      continue;
    }

    if (!current) fail(EKind::kSchema, "indented line outside a channel");
    const std::string& kw = head.value;
    auto single_word = [&](const char* what) -> const std::string& {
      if (tokens.size() != 2 || !tokens[1].key.empty() || tokens[1].quoted)
        fail(EKind::kSchema, std::string("expected ") + what);
      return tokens[1].value;
    };

    if (kw == "claim" || kw == "use" || kw == "auth" || kw == "derive") {
      const Role role = kw == "claim" ? Role::kClaim
                        : kw == "use" ? Role::kUse
                        : kw == "auth" ? Role::kAuth
                                       : Role::kDerive;
      if (tokens.size() < 3 || !tokens[1].key.empty() || tokens[1].quoted ||
          !tokens[2].key.empty() || !tokens[2].quoted)
        fail(EKind::kSchema, "expected " + kw + " <kind> \"<name>\" ref=<binding>");
      ApiSig sig;
      const auto kind = parse_kind(tokens[1].value);
      if (!kind) fail(EKind::kSchema, "unknown API kind '" + tokens[1].value + "'");
      sig.kind = *kind;
      sig.name = tokens[2].value;
      bool have_ref = false;
      std::set<std::string> seen;
      for (std::size_t t = 3; t < tokens.size(); ++t) {
        const Token& tk = tokens[t];
        if (tk.key.empty()) fail(EKind::kSchema, "unexpected token '" + tk.value + "'");
        if (!seen.insert(tk.key).second) fail(EKind::kSchema, "duplicate key '" + tk.key + "'");
        if (tk.key == "ref") {
          const auto b = parse_binding(tk.value);
          if (!b) fail(EKind::kBadBinding, "bad binding '" + tk.value + "'");
          sig.ref = *b;
          have_ref = true;
        } else if (tk.key == "from" && role == Role::kDerive) {
          const auto b = parse_binding(tk.value);
          if (!b) fail(EKind::kBadBinding, "bad binding '" + tk.value + "'");
          sig.from = *b;
        } else if (tk.key == "carrier" && role == Role::kAuth) {
          const auto c = parse_carrier(tk.value);
          if (!c) fail(EKind::kSchema, "bad carrier '" + tk.value + "'");
          sig.carrier = *c;
        } else if (tk.key == "literal" && role == Role::kAuth) {
          sig.literal = tk.value;
        } else {
          fail(EKind::kSchema, "unknown key '" + tk.key + "' for " + kw);
        }
      }
      if (!have_ref) fail(EKind::kSchema, "missing ref=<binding>");
      if (const std::string err = check_name(sig, role); !err.empty()) fail(EKind::kSchema, err);
      const std::string err = check_sig(sig, role);
      if (!err.empty()) fail(EKind::kBadBinding, err);
      (role == Role::kClaim  ? current->claims
       : role == Role::kUse  ? current->uses
       : role == Role::kAuth ? current->auths
                             : current->derives)
          .push_back(std::move(sig));
    } else if (kw == "platform") {
      if (tokens.size() != 3 || !tokens[1].key.empty() || tokens[2].key != "auth")
        fail(EKind::kSchema, "expected platform <osx|ios> auth=<yes|no>");
      const auto p = parse_platform(tokens[1].value);
      if (!p) fail(EKind::kSchema, "unknown platform '" + tokens[1].value + "'");
      if (tokens[2].value != "yes" && tokens[2].value != "no")
        fail(EKind::kSchema, "auth must be yes or no");
      current->platform_auth_available[*p] = tokens[2].value == "yes";
    } else if (kw == "auth-mode") {
      const std::string& v = single_word("auth-mode <any|all>");
      if (v != "any" && v != "all") fail(EKind::kSchema, "auth-mode must be any or all");
      current->auth_mode = v == "all" ? AuthMode::kAll : AuthMode::kAny;
    } else if (kw == "no-auth-verdict" || kw == "claim-verdict") {
      const auto v = parse_verdict(single_word("a verdict"));
      if (!v) fail(EKind::kSchema, "unknown verdict '" + tokens[1].value + "'");
      if (kw == "no-auth-verdict") {
        current->no_auth_verdict = *v;
      } else {
        current->claim_verdict = *v;
      }
    } else if (kw == "reserved") {
      if (tokens.size() != 2 || !tokens[1].quoted || tokens[1].value.empty())
        fail(EKind::kSchema, "expected reserved \"<name>\"");
      current->reserved_names.push_back(tokens[1].value);
    } else {
      fail(EKind::kSchema, "unknown key '" + kw + "'");
    }
  }
  close_channel();
  return rs;
}

std::string save_rules(const RuleSet& rules) {
  std::ostringstream os;
  os << kHeader << '\n';
  if (!rules.version.empty()) os << "ruleset " << ir::quote(rules.version) << '\n';
  for (const auto& [id, r] : rules.rules) {
    os << "channel " << to_string(id) << '\n';
    for (const auto& s : r.claims) os << sig_line("claim", s);
    for (const auto& s : r.uses) os << sig_line("use", s);
    for (const auto& s : r.derives) os << sig_line("derive", s);
    for (const auto& s : r.auths) os << sig_line("auth", s);
    for (const auto& [p, avail] : r.platform_auth_available)
      os << "  platform " << to_string(p) << " auth=" << (avail ? "yes" : "no") << '\n';
    os << "  auth-mode " << (r.auth_mode == AuthMode::kAll ? "all" : "any") << '\n';
    os << "  no-auth-verdict " << to_string(r.no_auth_verdict) << '\n';
    if (r.claim_verdict) os << "  claim-verdict " << to_string(*r.claim_verdict) << '\n';
    for (const auto& n : r.reserved_names) os << "  reserved " << ir::quote(n) << '\n';
  }
  return os.str();
}

}  // namespace xara::rules
