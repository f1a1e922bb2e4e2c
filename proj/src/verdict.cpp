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

#include "xara/verdict.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include "nlohmann/json.hpp"
#include "xara/cfg.hpp"

namespace xara::verdict {
namespace {

using nlohmann::json;
using rules::ApiKind;
using rules::ApiSig;
using rules::Binding;

struct CallInfo {
  std::string symbol;
  bool objc = false;
  std::optional<std::string> selector;

  std::string api() const { return objc && selector ? *selector : symbol; }
};

bool sig_matches(const ApiSig& sig, const CallInfo& ci) {
  switch (sig.kind) {
    case ApiKind::kCSymbol:
      return sig.name == "*" || ci.symbol == sig.name || ci.symbol == "_" + sig.name;
    case ApiKind::kObjcSelector:
      if (!ci.objc) return false;
      if (sig.name == "*") return true;
      return ci.selector && rules::selector_matches(sig.name, *ci.selector);
    case ApiKind::kUrlLiteral:
      return false;
  }
  return false;
}

// Raw call argument position named by a binding at a given call site.
std::optional<int> raw_position(const ApiSig& sig, const Binding& b, const cfg::Cfg& cfg,
                                std::size_t call) {
  const int shift = sig.kind == ApiKind::kObjcSelector ? 2 : 0;
  std::optional<int> pos;
  switch (b.kind) {
    case Binding::Kind::kArg:
      pos = b.index.value_or(0) + shift;
      break;
    case Binding::Kind::kReceiver:
      pos = 0;
      break;
    case Binding::Kind::kOutParam:
      if (b.index) {
        pos = *b.index + shift;
      } else {
        pos = cfg::call_bindings(cfg, call).last_outparam(cfg);
      }
      break;
    default:
      break;
  }
  if (pos && (*pos < 0 || *pos > ir::kMaxArgIndex)) return std::nullopt;
  return pos;
}

struct ProcCtx {
  const ir::Procedure* proc = nullptr;
  cfg::Cfg cfg;
  std::set<cfg::BlockId> reachable;
  std::vector<std::optional<CallInfo>> calls;  // live call sites only

  bool live(std::size_t i) const { return reachable.count(cfg.block_of(i)) > 0; }
};

// One procedure on the route from the claim to a use: the reference enters
// at `def` and leaves toward the use (or the next frame) at `index`.
struct Frame {
  const ProcCtx* ctx = nullptr;
  dataflow::RefSite def;
  std::shared_ptr<const dataflow::DefUseChain> chain;
  std::size_t index = 0;
  int position = 0;  // argument position carrying the reference onward
};

struct UseRecord {
  UseSite site;
  std::vector<Frame> frames;
};

struct ClaimSite {
  std::size_t index = 0;
  const ApiSig* sig = nullptr;
  std::string api;
  ir::Location location;
  std::optional<std::string> scheme;
};

class Analyzer {
 public:
  Analyzer(const ir::Listing& listing, const rules::RuleSet& rules, Platform platform)
      : listing_(listing), rules_(rules), platform_(platform) {
    std::vector<cfg::Cfg> cfgs;
    for (const auto& p : listing.procedures) {
      try {
        ProcCtx ctx;
        ctx.proc = &p;
        ctx.cfg = cfg::build_cfg(p);
        ctx.reachable = cfg::reachable_blocks(ctx.cfg);
        ctx.calls.resize(ctx.cfg.code.size());
        for (std::size_t i = 0; i < ctx.cfg.code.size(); ++i) {
          if (!ctx.live(i)) continue;
          const auto* c = std::get_if<ir::Call>(&ctx.cfg.code[i]);
          if (!c) continue;
          CallInfo ci{c->symbol, rules::is_objc_dispatch(c->symbol), std::nullopt};
          if (ci.objc) ci.selector = cfg::resolve_selector(ctx.cfg, i);
          ctx.calls[i] = std::move(ci);
        }
        cfgs.push_back(ctx.cfg);
        ctxs_.push_back(std::move(ctx));
      } catch (const AnalysisError&) {
        throw;
      } catch (const Error& e) {
        throw AnalysisError(p.name, e.what());
      }
    }
    for (std::size_t i = 0; i < ctxs_.size(); ++i) by_name_[ctxs_[i].proc->name] = i;
    graph_ = cfg::build_callgraph(listing, cfgs);
  }

  Report run() {
    Report report;
    report.source = listing_.source_name;
    report.platform = platform_;
    report.ruleset_version = rules_.version;
    for (const ProcCtx& ctx : ctxs_) {
      try {
        for (const auto& [id, rule] : rules_.rules) {
          for (const ClaimSite& site : claim_sites(ctx, rule)) {
            if (auto f = evaluate(ctx, rule, site)) report.findings.push_back(std::move(*f));
          }
        }
      } catch (const AnalysisError&) {
        throw;
      } catch (const Error& e) {
        throw AnalysisError(ctx.proc->name, e.what());
      }
    }
    std::stable_sort(report.findings.begin(), report.findings.end(),
                     [](const Finding& a, const Finding& b) {
                       return std::tie(a.claim.procedure, a.claim.index, a.channel) <
                              std::tie(b.claim.procedure, b.claim.index, b.channel);
                     });
    report.summary = summarize(report.findings);
    return report;
  }

 private:
  std::vector<ClaimSite> claim_sites(const ProcCtx& ctx, const rules::ChannelRule& rule) const {
    std::vector<ClaimSite> out;
    for (std::size_t i = 0; i < ctx.cfg.code.size(); ++i) {
      if (!ctx.live(i)) continue;
      for (const ApiSig& sig : rule.claims) {
        if (sig.kind == ApiKind::kUrlLiteral) {
          const auto* s = std::get_if<ir::LoadStr>(&ctx.cfg.code[i]);
          if (!s) continue;
          const auto scheme = rules::url_scheme(s->literal, rule.reserved_names);
          if (!scheme) continue;
          if (sig.name != "*" && rules::url_scheme(sig.name + "://") != scheme) continue;
          out.push_back({i, &sig, s->literal, s->dst, scheme});
          break;
        }
        if (!ctx.calls[i] || !sig_matches(sig, *ctx.calls[i])) continue;
        std::optional<ir::Location> loc;
        if (sig.ref.kind == Binding::Kind::kReturnValue) {
          loc = ir::Location::rv();
        } else if (const auto pos = raw_position(sig, sig.ref, ctx.cfg, i)) {
          const auto b = cfg::call_bindings(ctx.cfg, i);
          if (const auto at = b.at(*pos)) {
            if (const auto* a = std::get_if<ir::Arg>(&ctx.cfg.code[*at])) {
              if (sig.ref.kind != Binding::Kind::kOutParam) loc = a->src;
            } else if (const auto* aa = std::get_if<ir::ArgAddr>(&ctx.cfg.code[*at])) {
              loc = aa->slot;
            }
          }
        }
        if (!loc) continue;
        out.push_back({i, &sig, ctx.calls[i]->api(), *loc, std::nullopt});
        break;
      }
    }
    return out;
  }

  dataflow::ChainOptions derivations(const ProcCtx& ctx, const rules::ChannelRule& rule) const {
    dataflow::ChainOptions opts;
    for (std::size_t i = 0; i < ctx.calls.size(); ++i) {
      if (!ctx.calls[i]) continue;
      for (const ApiSig& sig : rule.derives) {
        if (!sig_matches(sig, *ctx.calls[i])) continue;
        const auto in = raw_position(sig, sig.from.value_or(Binding::arg(0)), ctx.cfg, i);
        if (!in) continue;
        dataflow::Derivation d;
        d.input = *in;
        if (sig.ref.kind == Binding::Kind::kReturnValue) {
          d.output = dataflow::Derivation::Output::kReturnValue;
        } else {
          const auto out = raw_position(sig, sig.ref, ctx.cfg, i);
          if (!out) continue;
          d.output = dataflow::Derivation::Output::kOutParam;
          d.output_position = *out;
        }
        opts.derivations[i] = d;
        break;
      }
    }
    return opts;
  }

  static std::set<int> reference_positions(const dataflow::DefUseChain& chain, std::size_t call) {
    std::set<int> out;
    for (const auto& u : chain.uses_at(call))
      if (u.tag == dataflow::Tag::kReference) out.insert(u.position);
    return out;
  }

  void follow(const ProcCtx& ctx, const dataflow::RefSite& def, const rules::ChannelRule& rule,
              int depth, const std::vector<Frame>& prefix, std::vector<UseRecord>& uses,
              std::vector<Evidence>& evidence, std::set<std::string>& notes) const {
    auto chain = std::make_shared<const dataflow::DefUseChain>(
        dataflow::compute_chain(ctx.cfg, def, derivations(ctx, rule)));
    std::set<std::size_t> calls;
    for (const auto& u : chain->uses) calls.insert(u.call_index);
    for (const std::size_t c : calls) {
      if (def.index && c == *def.index) continue;
      if (!ctx.calls[c]) continue;
      const std::set<int> positions = reference_positions(*chain, c);
      if (positions.empty()) continue;
      const CallInfo& ci = *ctx.calls[c];

      for (const ApiSig& sig : rule.uses) {
        if (!sig_matches(sig, ci)) continue;
        int at = *positions.begin();
        if (sig.ref.kind != Binding::Kind::kAny) {
          const auto pos = raw_position(sig, sig.ref, ctx.cfg, c);
          if (!pos || !positions.count(*pos)) continue;
          at = *pos;
        }
        UseRecord rec{{ctx.proc->name, c, ci.api()}, prefix};
        rec.frames.push_back({&ctx, def, chain, c, at});
        uses.push_back(std::move(rec));
        break;
      }

      if (const auto callee = graph_.callee_at(ctx.proc->name, c)) {
        if (depth + 1 > kMaxCallDepth) {
          notes.insert("inter-procedural descent truncated at " + ctx.proc->name + ":" +
                       std::to_string(c) + " -> " + *callee);
          continue;
        }
        const ProcCtx& next = ctxs_[by_name_.at(*callee)];
        for (const int pos : positions) {
          evidence.push_back({ctx.proc->name, c,
                              "call enters " + *callee + " with the reference in r" +
                                  std::to_string(pos)});
          std::vector<Frame> deeper = prefix;
          deeper.push_back({&ctx, def, chain, c, pos});
          follow(next, {next.proc->name, std::nullopt, ir::Location::reg(pos)}, rule, depth + 1,
                 deeper, uses, evidence, notes);
        }
      } else {
        for (const auto& amb : graph_.ambiguous) {
          if (amb.caller == ctx.proc->name && amb.site == c) {
            notes.insert("ambiguous dispatch of " + amb.selector + " at " + ctx.proc->name + ":" +
                         std::to_string(c) + " not followed");
          }
        }
      }
    }
  }

  static bool literal_argument(const ProcCtx& ctx, std::size_t call, const std::string& lit) {
    for (const auto& [pos, idx] : cfg::call_bindings(ctx.cfg, call).by_position) {
      (void)idx;
      if (cfg::resolve_string(ctx.cfg, call, pos) == lit) return true;
    }
    return false;
  }

  static std::set<std::size_t> auth_sites(const Frame& f, const ApiSig& sig) {
    std::set<std::size_t> out;
    const ProcCtx& ctx = *f.ctx;
    for (std::size_t j = 0; j < ctx.calls.size(); ++j) {
      if (!ctx.calls[j] || !sig_matches(sig, *ctx.calls[j])) continue;
      if (sig.literal && !literal_argument(ctx, j, *sig.literal)) continue;
      if (sig.ref.kind == Binding::Kind::kNone) {
        out.insert(j);
        continue;
      }
      std::optional<int> pos;
      if (sig.ref.kind != Binding::Kind::kAny) {
        pos = raw_position(sig, sig.ref, ctx.cfg, j);
        if (!pos) continue;
      }
      for (const auto& u : f.chain->uses_at(j)) {
        if (pos && u.position != *pos) continue;
        const bool tag_ok = sig.carrier == rules::CarrierReq::kAny ||
                            (sig.carrier == rules::CarrierReq::kReference) ==
                                (u.tag == dataflow::Tag::kReference);
        if (tag_ok) {
          out.insert(j);
          break;
        }
      }
    }
    return out;
  }

  static std::set<std::size_t> auth_sites(const Frame& f, const std::vector<const ApiSig*>& sigs) {
    std::set<std::size_t> out;
    for (const ApiSig* s : sigs) {
      const auto part = auth_sites(f, *s);
      out.insert(part.begin(), part.end());
    }
    return out;
  }

  static bool covered(const UseRecord& u, const std::vector<const ApiSig*>& sigs) {
    for (const Frame& f : u.frames) {
      if (dataflow::auth_on_all_paths(f.ctx->cfg, f.def, f.index, auth_sites(f, sigs)))
        return true;
    }
    return false;
  }

  static bool partly_covered(const UseRecord& u, const std::vector<const ApiSig*>& sigs) {
    for (const Frame& f : u.frames) {
      if (dataflow::auth_on_some_path(f.ctx->cfg, f.def, f.index, auth_sites(f, sigs)))
        return true;
    }
    return false;
  }

  std::optional<Finding> evaluate(const ProcCtx& ctx, const rules::ChannelRule& rule,
                                  const ClaimSite& site) const {
    Finding f;
    f.channel = rule.id;
    f.claim = {ctx.proc->name, site.index, site.location};
    f.claim_api = site.api;
    f.platform = platform_;
    const Evidence claim_ev{ctx.proc->name, site.index,
                            "claim " + site.api + " defines " + ir::to_string(site.location)};

    if (rule.claim_verdict) {
      f.verdict = *rule.claim_verdict;
      f.auth_status = AuthStatus::kNotApplicable;
      f.evidence.push_back(claim_ev);
      return f;
    }

    std::vector<UseRecord> uses;
    std::vector<Evidence> evidence;
    std::set<std::string> notes;
    follow(ctx, f.claim, rule, 0, {}, uses, evidence, notes);

    std::set<std::pair<std::string, std::size_t>> seen;
    std::vector<UseRecord> unique;
    for (auto& u : uses) {
      if (seen.insert({u.site.procedure, u.site.index}).second) unique.push_back(std::move(u));
    }
    if (unique.empty()) return std::nullopt;

    for (const auto& u : unique) {
      f.uses.push_back(u.site);
      evidence.push_back({u.site.procedure, u.site.index, "use " + u.site.api +
                                                              " consumes the reference"});
    }
    std::sort(f.uses.begin(), f.uses.end(), [](const UseSite& a, const UseSite& b) {
      return std::tie(a.procedure, a.index) < std::tie(b.procedure, b.index);
    });

    std::vector<const ApiSig*> all_sigs;
    for (const ApiSig& s : rule.auths) all_sigs.push_back(&s);

    if (site.scheme && std::find(rule.reserved_names.begin(), rule.reserved_names.end(),
                                 *site.scheme) != rule.reserved_names.end()) {
      f.verdict = Verdict::kNotApplicable;
      f.auth_status = AuthStatus::kNotApplicable;
      notes.insert("reserved scheme '" + *site.scheme + "' is exempt");
    } else if (!rule.auth_available(platform_)) {
      f.verdict = rule.no_auth_verdict;
      f.auth_status = AuthStatus::kNotApplicable;
      notes.insert("no authentication API for " + std::string(rules::to_string(rule.id)) +
                   " on " + std::string(to_string(platform_)));
    } else {
      bool all = !all_sigs.empty();
      bool some = false;
      for (const auto& u : unique) {
        bool ok = true;
        if (rule.auth_mode == rules::AuthMode::kAll) {
          for (const ApiSig* s : all_sigs) ok = ok && covered(u, {s});
        } else {
          ok = covered(u, all_sigs);
        }
        all = all && ok;
        some = some || ok || partly_covered(u, all_sigs);
      }
      if (all) {
        f.auth_status = AuthStatus::kPresentAllPaths;
        f.verdict = Verdict::kSafe;
      } else {
        f.auth_status = some ? AuthStatus::kPresentSomePaths : AuthStatus::kMissing;
        f.verdict = Verdict::kVulnerable;
      }
      std::set<std::pair<const ProcCtx*, std::size_t>> listed;
      for (const auto& u : unique) {
        for (const Frame& fr : u.frames) {
          for (const std::size_t a : auth_sites(fr, all_sigs)) {
            if (!listed.insert({fr.ctx, a}).second) continue;
            evidence.push_back({fr.ctx->proc->name, a,
                                "auth " + fr.ctx->calls[a]->api() + " checks the reference"});
          }
        }
      }
    }

    std::sort(evidence.begin(), evidence.end(), [&](const Evidence& a, const Evidence& b) {
      const bool ao = a.procedure != ctx.proc->name;
      const bool bo = b.procedure != ctx.proc->name;
      return std::tie(ao, a.procedure, a.index, a.explanation) <
             std::tie(bo, b.procedure, b.index, b.explanation);
    });
    evidence.erase(std::unique(evidence.begin(), evidence.end()), evidence.end());
    f.evidence.push_back(claim_ev);
    f.evidence.insert(f.evidence.end(), evidence.begin(), evidence.end());
    f.notes.assign(notes.begin(), notes.end());
    return f;
  }

  const ir::Listing& listing_;
  const rules::RuleSet& rules_;
  Platform platform_;
  std::vector<ProcCtx> ctxs_;
  std::map<std::string, std::size_t> by_name_;
  cfg::CallGraph graph_;
};

json site_json(const std::string& proc, std::optional<std::size_t> index) {
  json j;
  j["proc"] = proc;
  j["index"] = index ? json(*index) : json(nullptr);
  return j;
}

template <typename T, typename Parse>
T parse_or_throw(const json& j, Parse parse, const char* what) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw Error(std::string("bad ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

}  // namespace

std::string_view to_string(AuthStatus s) {
  switch (s) {
    case AuthStatus::kMissing: return "missing";
    case AuthStatus::kPresentAllPaths: return "present-all-paths";
    case AuthStatus::kPresentSomePaths: return "present-some-paths";
    case AuthStatus::kNotApplicable: return "not-applicable";
  }
  return "";
}

std::optional<AuthStatus> parse_auth_status(std::string_view s) {
  for (const AuthStatus a : {AuthStatus::kMissing, AuthStatus::kPresentAllPaths,
                             AuthStatus::kPresentSomePaths, AuthStatus::kNotApplicable})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

std::size_t& ChannelCounts::operator[](Verdict v) {
  switch (v) {
    case Verdict::kVulnerable: return vulnerable;
    case Verdict::kSafe: return safe;
    case Verdict::kInformational: return informational;
    case Verdict::kNotApplicable: return not_applicable;
  }
  return vulnerable;
}

bool Report::has_vulnerable() const {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.verdict == Verdict::kVulnerable; });
}

std::map<rules::ChannelId, ChannelCounts> summarize(const std::vector<Finding>& findings) {
  std::map<rules::ChannelId, ChannelCounts> out;
  for (const auto id : rules::all_channels()) out[id] = {};
  for (const auto& f : findings) ++out[f.channel][f.verdict];
  return out;
}

Report analyze(const ir::Listing& listing, const rules::RuleSet& rules, Platform platform) {
  return Analyzer(listing, rules, platform).run();
}

std::string render_report(const Report& report, Format format) {
  if (format == Format::kJson) {
    json j;
    j["source"] = report.source;
    j["platform"] = std::string(to_string(report.platform));
    j["ruleset_version"] = report.ruleset_version;
    j["findings"] = json::array();
    for (const auto& f : report.findings) {
      json jf;
      jf["channel"] = std::string(rules::to_string(f.channel));
      jf["verdict"] = std::string(to_string(f.verdict));
      jf["auth_status"] = std::string(to_string(f.auth_status));
      jf["platform"] = std::string(to_string(f.platform));
      json claim = site_json(f.claim.procedure, f.claim.index);
      claim["location"] = ir::to_string(f.claim.location);
      claim["api"] = f.claim_api;
      jf["claim"] = claim;
      jf["uses"] = json::array();
      for (const auto& u : f.uses) {
        json ju = site_json(u.procedure, u.index);
        ju["api"] = u.api;
        jf["uses"].push_back(ju);
      }
      jf["evidence"] = json::array();
      for (const auto& e : f.evidence) {
        json je = site_json(e.procedure, e.index);
        je["text"] = e.explanation;
        jf["evidence"].push_back(je);
      }
      jf["notes"] = f.notes;
      j["findings"].push_back(jf);
    }
    json summary = json::object();
    for (const auto& [id, c] : report.summary) {
      summary[std::string(rules::to_string(id))] = {{"vulnerable", c.vulnerable},
                                                    {"safe", c.safe},
                                                    {"informational", c.informational},
                                                    {"not_applicable", c.not_applicable}};
    }
    j["summary"] = summary;
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  os << "report " << report.source << " platform=" << to_string(report.platform)
     << " ruleset=" << (report.ruleset_version.empty() ? "-" : report.ruleset_version) << '\n';
  for (const auto& f : report.findings) {
    os << "finding " << rules::to_string(f.channel) << ' ' << to_string(f.verdict)
       << " auth=" << to_string(f.auth_status) << '\n';
    os << "  claim " << f.claim.procedure << ':'
       << (f.claim.index ? std::to_string(*f.claim.index) : "entry") << ' '
       << ir::quote(f.claim_api) << ' ' << ir::to_string(f.claim.location) << '\n';
    for (const auto& u : f.uses)
      os << "  use " << u.procedure << ':' << u.index << ' ' << ir::quote(u.api) << '\n';
    for (const auto& e : f.evidence)
      os << "  evidence " << e.procedure << ':' << e.index << ' ' << e.explanation << '\n';
    for (const auto& n : f.notes) os << "  note " << n << '\n';
  }
  os << "summary\n";
  for (const auto& [id, c] : report.summary) {
    os << "  " << rules::to_string(id) << " vulnerable=" << c.vulnerable << " safe=" << c.safe
       << " informational=" << c.informational << " not-applicable=" << c.not_applicable << '\n';
  }
  return os.str();
}

Report report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("report json: ") + e.what());
  }
  try {
    Report r;
    r.source = j.at("source").get<std::string>();
    r.platform = parse_or_throw<Platform>(j.at("platform"), parse_platform, "platform");
    r.ruleset_version = j.at("ruleset_version").get<std::string>();
    auto opt_index = [](const json& v) -> std::optional<std::size_t> {
      if (v.is_null()) return std::nullopt;
      return v.get<std::size_t>();
    };
    for (const auto& jf : j.at("findings")) {
      Finding f;
      f.channel = parse_or_throw<rules::ChannelId>(jf.at("channel"), rules::parse_channel,
                                                   "channel");
      f.verdict = parse_or_throw<Verdict>(jf.at("verdict"), parse_verdict, "verdict");
      f.auth_status =
          parse_or_throw<AuthStatus>(jf.at("auth_status"), parse_auth_status, "auth status");
      f.platform = parse_or_throw<Platform>(jf.at("platform"), parse_platform, "platform");
      const json& c = jf.at("claim");
      f.claim.procedure = c.at("proc").get<std::string>();
      f.claim.index = opt_index(c.at("index"));
      f.claim.location =
          parse_or_throw<ir::Location>(c.at("location"), ir::parse_location, "location");
      f.claim_api = c.at("api").get<std::string>();
      for (const auto& u : jf.at("uses"))
        f.uses.push_back({u.at("proc").get<std::string>(), u.at("index").get<std::size_t>(),
                          u.at("api").get<std::string>()});
      for (const auto& e : jf.at("evidence"))
        f.evidence.push_back({e.at("proc").get<std::string>(), e.at("index").get<std::size_t>(),
                              e.at("text").get<std::string>()});
      f.notes = jf.at("notes").get<std::vector<std::string>>();
      r.findings.push_back(std::move(f));
    }
    for (const auto& [name, c] : j.at("summary").items()) {
      const auto id = rules::parse_channel(name);
      if (!id) throw Error("report json: unknown channel '" + name + "'");
      r.summary[*id] = {c.at("vulnerable").get<std::size_t>(), c.at("safe").get<std::size_t>(),
                        c.at("informational").get<std::size_t>(),
                        c.at("not_applicable").get<std::size_t>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("report json: ") + e.what());
  }
}

}  // namespace xara::verdict
