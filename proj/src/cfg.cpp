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

#include "xara/cfg.hpp"

#include <algorithm>
#include <sstream>

#include "xara/rules.hpp"

namespace xara::cfg {

Cfg build_cfg(const ir::Procedure& proc) {
  Cfg g;
  g.procedure = proc.name;
  g.code = proc.instructions;
  const std::size_t n = g.code.size();
  if (n == 0) return g;

  std::vector<bool> leader(n, false);
  leader[0] = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ins = g.code[i];
    if (const auto* j = std::get_if<ir::Jmp>(&ins)) leader[j->target] = true;
    if (const auto* b = std::get_if<ir::Br>(&ins)) leader[b->target] = true;
    if (ir::is_terminator(ins) && i + 1 < n) leader[i + 1] = true;
  }

  g.owner_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (leader[i]) g.blocks.push_back({g.blocks.size(), i, i, {}});
    g.blocks.back().end = i + 1;
    g.owner_[i] = g.blocks.back().id;
  }

  for (auto& b : g.blocks) {
    const std::size_t last = b.end - 1;
    const auto& ins = g.code[last];
    auto add = [&](BlockId s) {
      if (std::find(b.successors.begin(), b.successors.end(), s) == b.successors.end())
        b.successors.push_back(s);
    };
    if (const auto* j = std::get_if<ir::Jmp>(&ins)) {
      add(g.owner_[j->target]);
    } else if (const auto* br = std::get_if<ir::Br>(&ins)) {
      if (last + 1 < n) add(g.owner_[last + 1]);
      add(g.owner_[br->target]);
    } else if (!std::holds_alternative<ir::Ret>(ins) && last + 1 < n) {
      add(g.owner_[last + 1]);
    }
  }
  return g;
}

BlockId Cfg::block_of(std::size_t instruction) const { return owner_.at(instruction); }

bool Cfg::is_leader(std::size_t instruction) const {
  return blocks[block_of(instruction)].start == instruction;
}

std::vector<std::size_t> Cfg::instruction_successors(std::size_t instruction) const {
  const auto& b = blocks[block_of(instruction)];
  if (instruction + 1 < b.end) return {instruction + 1};
  std::vector<std::size_t> out;
  for (const BlockId s : b.successors) out.push_back(blocks[s].start);
  return out;
}

std::set<BlockId> reachable_blocks(const Cfg& cfg) {
  std::set<BlockId> seen;
  if (cfg.blocks.empty()) return seen;
  std::vector<BlockId> stack{cfg.entry};
  while (!stack.empty()) {
    const BlockId b = stack.back();
    stack.pop_back();
    if (!seen.insert(b).second) continue;
    for (const BlockId s : cfg.blocks[b].successors) stack.push_back(s);
  }
  return seen;
}

std::string to_dot(const Cfg& cfg) {
  std::ostringstream os;
  os << "digraph " << ir::quote(cfg.procedure) << " {\n";
  os << "  node [shape=box fontname=monospace];\n";
  for (const auto& b : cfg.blocks) {
    std::string label;
    for (std::size_t i = b.start; i < b.end; ++i) {
      label += std::to_string(i) + ": " + ir::to_string(cfg.code[i]) + "\\l";
    }
    // quote() escapes the backslashes of \l; undo that for Graphviz.
    std::string q = ir::quote(label);
    for (std::size_t p = 0; (p = q.find("\\\\l", p)) != std::string::npos;) q.replace(p, 3, "\\l");
    os << "  b" << b.id << " [label=" << q << "];\n";
  }
  for (const auto& b : cfg.blocks) {
    for (const BlockId s : b.successors) os << "  b" << b.id << " -> b" << s << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::optional<std::size_t> CallBindings::at(int position) const {
  const auto it = by_position.find(position);
  if (it == by_position.end()) return std::nullopt;
  return it->second;
}

std::optional<int> CallBindings::last_outparam(const Cfg& cfg) const {
  std::optional<int> best;
  for (const auto& [pos, idx] : by_position) {
    if (std::holds_alternative<ir::ArgAddr>(cfg.code[idx])) best = pos;
  }
  return best;
}

CallBindings call_bindings(const Cfg& cfg, std::size_t call_index) {
  CallBindings out;
  const auto& b = cfg.blocks[cfg.block_of(call_index)];
  std::size_t from = b.start;
  for (std::size_t i = call_index; i > b.start; --i) {
    if (std::holds_alternative<ir::Call>(cfg.code[i - 1])) {
      from = i;
      break;
    }
  }
  for (std::size_t i = from; i < call_index; ++i) {
    if (const auto* a = std::get_if<ir::Arg>(&cfg.code[i])) out.by_position[a->index] = i;
    if (const auto* a = std::get_if<ir::ArgAddr>(&cfg.code[i])) out.by_position[a->index] = i;
  }
  return out;
}

namespace {

// Block-local constant propagation of selector or string literals up to the
// Arg binding `position` of the call.
std::optional<std::string> constant_arg(const Cfg& cfg, std::size_t call_index, int position,
                                        bool selectors) {
  const auto bindings = call_bindings(cfg, call_index);
  const auto arg = bindings.at(position);
  if (!arg) return std::nullopt;
  const auto* a = std::get_if<ir::Arg>(&cfg.code[*arg]);
  if (!a) return std::nullopt;

  std::map<ir::Location, std::string> known;
  const auto& b = cfg.blocks[cfg.block_of(call_index)];
  for (std::size_t i = b.start; i < *arg; ++i) {
    const auto& ins = cfg.code[i];
    if (const auto* s = std::get_if<ir::LoadSel>(&ins)) {
      if (selectors) {
        known[s->dst] = s->selector;
      } else {
        known.erase(s->dst);
      }
    } else if (const auto* s = std::get_if<ir::LoadStr>(&ins)) {
      if (selectors) {
        known.erase(s->dst);
      } else {
        known[s->dst] = s->literal;
      }
    } else if (const auto* m = std::get_if<ir::Move>(&ins)) {
      const auto it = known.find(m->src);
      if (it != known.end()) {
        const std::string v = it->second;
        known[m->dst] = v;
      } else {
        known.erase(m->dst);
      }
    } else if (const auto* s = std::get_if<ir::LoadImm>(&ins)) {
      known.erase(s->dst);
    } else if (const auto* s = std::get_if<ir::ArgAddr>(&ins)) {
      known.erase(s->slot);
    } else if (std::holds_alternative<ir::Call>(ins)) {
      known.erase(ir::Location::rv());
    }
  }
  const auto it = known.find(a->src);
  if (it == known.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::optional<std::string> resolve_selector(const Cfg& cfg, std::size_t call_index) {
  return constant_arg(cfg, call_index, 1, true);
}

std::optional<std::string> resolve_string(const Cfg& cfg, std::size_t call_index,
                                          int position) {
  return constant_arg(cfg, call_index, position, false);
}

std::optional<std::string> CallGraph::callee_at(const std::string& caller,
                                                std::size_t site) const {
  for (const auto& e : edges)
    if (e.caller == caller && e.site == site) return e.callee;
  return std::nullopt;
}

CallGraph build_callgraph(const ir::Listing& listing) {
  std::vector<Cfg> cfgs;
  for (const auto& p : listing.procedures) cfgs.push_back(build_cfg(p));
  return build_callgraph(listing, cfgs);
}

CallGraph build_callgraph(const ir::Listing& listing, const std::vector<Cfg>& cfgs) {
  CallGraph g;
  std::map<std::string, std::vector<std::string>> by_selector;
  std::set<std::string> names;
  for (const auto& p : listing.procedures) {
    g.nodes.push_back(p.name);
    names.insert(p.name);
    const std::string sel = ir::selector_of(p.name);
    if (!sel.empty()) by_selector[sel].push_back(p.name);
  }

  for (const auto& cfg : cfgs) {
    for (std::size_t i = 0; i < cfg.code.size(); ++i) {
      const auto* call = std::get_if<ir::Call>(&cfg.code[i]);
      if (!call) continue;
      if (names.count(call->symbol)) {
        g.edges.push_back({cfg.procedure, i, call->symbol});
        continue;
      }
      if (!rules::is_objc_dispatch(call->symbol)) continue;
      const auto sel = resolve_selector(cfg, i);
      if (!sel) continue;
      const auto it = by_selector.find(*sel);
      if (it == by_selector.end()) continue;
      if (it->second.size() == 1) {
        g.edges.push_back({cfg.procedure, i, it->second.front()});
      } else {
        g.ambiguous.push_back({cfg.procedure, i, *sel, it->second});
      }
    }
  }
  return g;
}

}  // namespace xara::cfg
