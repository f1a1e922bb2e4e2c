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

#include "xara/dataflow.hpp"

#include <algorithm>
#include <deque>

namespace xara::dataflow {
namespace {

// Analysis facts: location carriers and pending argument slots. Slots record
// that the latest Arg/ArgAddr at a position (since the last call or block
// entry) passed a carrier, which keeps the transfer function a pure set map.
struct Fact {
  bool slot = false;
  ir::Location location;  // carrier location, or the Arg source for slots
  int position = 0;
  Tag tag = Tag::kReference;
  bool by_address = false;
  std::size_t arg_index = 0;

  auto operator<=>(const Fact&) const = default;
};

using State = std::set<Fact>;

Fact carrier(ir::Location loc, Tag tag) { return {false, loc, 0, tag, false, 0}; }

bool holds(const State& s, const ir::Location& loc, Tag tag) {
  return s.count(carrier(loc, tag)) > 0;
}

void erase_location(State& s, const ir::Location& loc) {
  s.erase(carrier(loc, Tag::kReference));
  s.erase(carrier(loc, Tag::kDerived));
}

void erase_slot(State& s, int position) {
  for (auto it = s.begin(); it != s.end();) {
    if (it->slot && it->position == position) {
      it = s.erase(it);
    } else {
      ++it;
    }
  }
}

void erase_all_slots(State& s) {
  for (auto it = s.begin(); it != s.end();) {
    if (it->slot) {
      it = s.erase(it);
    } else {
      ++it;
    }
  }
}

class Engine {
 public:
  Engine(const cfg::Cfg& cfg, const RefSite& def, const ChainOptions& opts)
      : cfg_(cfg), def_(def), opts_(opts), in_(cfg.code.size()), reached_(cfg.code.size()) {
    if (def.index) {
      const auto b = cfg::call_bindings(cfg, *def.index);
      for (const auto& [pos, idx] : b.by_position) def_bindings_.insert(idx);
    }
  }

  DefUseChain run() {
    const std::size_t n = cfg_.code.size();
    std::vector<State> block_in(cfg_.blocks.size());
    std::deque<cfg::BlockId> work;
    std::vector<bool> queued(cfg_.blocks.size(), false);
    std::size_t iterations = 0;

    auto flow_out = [&](cfg::BlockId b, State s) {
      erase_all_slots(s);
      for (const cfg::BlockId succ : cfg_.blocks[b].successors) {
        State& target = block_in[succ];
        const std::size_t before = target.size();
        target.insert(s.begin(), s.end());
        if (target.size() != before && !queued[succ]) {
          queued[succ] = true;
          work.push_back(succ);
        }
      }
    };
    auto run_block = [&](cfg::BlockId b, std::size_t first, State s) {
      ++iterations;
      for (std::size_t i = first; i < cfg_.blocks[b].end; ++i) {
        in_[i].insert(s.begin(), s.end());
        reached_[i] = true;
        s = transfer(i, in_[i]);
      }
      flow_out(b, std::move(s));
    };

    if (def_.index) {
      const std::size_t d = *def_.index;
      const cfg::BlockId b = cfg_.block_of(d);
      reached_[d] = true;
      run_block(b, d + 1, State{carrier(def_.location, Tag::kReference)});
    } else if (!cfg_.blocks.empty()) {
      block_in[cfg_.entry].insert(carrier(def_.location, Tag::kReference));
      queued[cfg_.entry] = true;
      work.push_back(cfg_.entry);
    }

    while (!work.empty()) {
      const cfg::BlockId b = work.front();
      work.pop_front();
      queued[b] = false;
      run_block(b, cfg_.blocks[b].start, block_in[b]);
    }

    DefUseChain chain;
    chain.def = def_;
    chain.uses.assign(uses_.begin(), uses_.end());
    chain.kills.assign(kills_.begin(), kills_.end());
    chain.carriers.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Fact& f : in_[i])
        if (!f.slot) chain.carriers[i].insert({f.location, f.tag});
    }
    chain.iterations = iterations;
    return chain;
  }

 private:
  void note_kill(std::size_t i, const State& s, const ir::Location& loc) {
    if (holds(s, loc, Tag::kReference)) kills_.insert(i);
  }

  State transfer(std::size_t i, const State& in) {
    State s = in;
    const auto& ins = cfg_.code[i];
    if (const auto* m = std::get_if<ir::Move>(&ins)) {
      const bool ref = holds(in, m->src, Tag::kReference);
      const bool der = holds(in, m->src, Tag::kDerived);
      if (!ref) note_kill(i, in, m->dst);
      erase_location(s, m->dst);
      if (ref) s.insert(carrier(m->dst, Tag::kReference));
      if (der) s.insert(carrier(m->dst, Tag::kDerived));
    } else if (const auto* l = std::get_if<ir::LoadSel>(&ins)) {
      note_kill(i, in, l->dst);
      erase_location(s, l->dst);
    } else if (const auto* l = std::get_if<ir::LoadStr>(&ins)) {
      note_kill(i, in, l->dst);
      erase_location(s, l->dst);
    } else if (const auto* l = std::get_if<ir::LoadImm>(&ins)) {
      note_kill(i, in, l->dst);
      erase_location(s, l->dst);
    } else if (const auto* a = std::get_if<ir::Arg>(&ins)) {
      erase_slot(s, a->index);
      for (const Tag t : {Tag::kReference, Tag::kDerived}) {
        if (holds(in, a->src, t)) s.insert({true, a->src, a->index, t, false, i});
      }
    } else if (const auto* a = std::get_if<ir::ArgAddr>(&ins)) {
      erase_slot(s, a->index);
      for (const Tag t : {Tag::kReference, Tag::kDerived}) {
        if (holds(in, a->slot, t)) s.insert({true, a->slot, a->index, t, true, i});
      }
      if (!def_bindings_.count(i)) {
        note_kill(i, in, a->slot);
        erase_location(s, a->slot);
      }
    } else if (std::holds_alternative<ir::Call>(ins)) {
      std::optional<ir::Location> derived_out;
      const auto dv = opts_.derivations.find(i);
      for (const Fact& f : in) {
        if (!f.slot) continue;
        uses_.insert({f.arg_index, i, f.position, f.location, f.tag, f.by_address});
        if (dv != opts_.derivations.end() && f.position == dv->second.input) {
          if (dv->second.output == Derivation::Output::kReturnValue) {
            derived_out = ir::Location::rv();
          } else {
            const auto b = cfg::call_bindings(cfg_, i);
            if (const auto at = b.at(dv->second.output_position)) {
              if (const auto* aa = std::get_if<ir::ArgAddr>(&cfg_.code[*at])) {
                derived_out = aa->slot;
              }
            }
          }
        }
      }
      note_kill(i, in, ir::Location::rv());
      erase_location(s, ir::Location::rv());
      erase_all_slots(s);
      if (derived_out) s.insert(carrier(*derived_out, Tag::kDerived));
    }
    if (def_.index && i == *def_.index) s.insert(carrier(def_.location, Tag::kReference));
    return s;
  }

  const cfg::Cfg& cfg_;
  const RefSite& def_;
  const ChainOptions& opts_;
  std::vector<State> in_;
  std::vector<bool> reached_;
  std::set<std::size_t> def_bindings_;
  std::set<Use> uses_;
  std::set<std::size_t> kills_;
};

// Instructions reachable from the definition without passing `blocked`.
std::vector<bool> reach_from(const cfg::Cfg& cfg, const RefSite& def,
                             const std::set<std::size_t>& blocked) {
  std::vector<bool> seen(cfg.code.size(), false);
  std::vector<std::size_t> stack;
  if (def.index) {
    for (const std::size_t s : cfg.instruction_successors(*def.index)) stack.push_back(s);
  } else if (!cfg.code.empty()) {
    stack.push_back(0);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (seen[i] || blocked.count(i) || (def.index && i == *def.index)) continue;
    seen[i] = true;
    for (const std::size_t s : cfg.instruction_successors(i)) stack.push_back(s);
  }
  return seen;
}

bool reaches(const cfg::Cfg& cfg, std::size_t from, std::size_t to) {
  std::vector<bool> seen(cfg.code.size(), false);
  std::vector<std::size_t> stack{from};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (i == to) return true;
    if (seen[i]) continue;
    seen[i] = true;
    for (const std::size_t s : cfg.instruction_successors(i)) stack.push_back(s);
  }
  return false;
}

}  // namespace

std::set<Tag> DefUseChain::tags_at(std::size_t call_index, int position) const {
  std::set<Tag> out;
  for (const auto& u : uses)
    if (u.call_index == call_index && u.position == position) out.insert(u.tag);
  return out;
}

std::vector<Use> DefUseChain::uses_at(std::size_t call_index) const {
  std::vector<Use> out;
  for (const auto& u : uses)
    if (u.call_index == call_index) out.push_back(u);
  return out;
}

DefUseChain compute_chain(const cfg::Cfg& cfg, const RefSite& def, const ChainOptions& options) {
  if (def.index) {
    if (*def.index >= cfg.code.size()) {
      throw DataflowError(DataflowError::Kind::kUnreachableDef,
                          "definition index " + std::to_string(*def.index) + " outside " +
                              cfg.procedure);
    }
    if (!cfg::reachable_blocks(cfg).count(cfg.block_of(*def.index))) {
      throw DataflowError(DataflowError::Kind::kUnreachableDef,
                          "definition at " + cfg.procedure + ":" + std::to_string(*def.index) +
                              " is in an unreachable block");
    }
  }
  return Engine(cfg, def, options).run();
}

bool auth_on_all_paths(const cfg::Cfg& cfg, const RefSite& def, std::size_t use_index,
                       const std::set<std::size_t>& auth_sites) {
  std::set<std::size_t> blocked = auth_sites;
  blocked.erase(use_index);
  return !reach_from(cfg, def, blocked)[use_index];
}

bool auth_on_some_path(const cfg::Cfg& cfg, const RefSite& def, std::size_t use_index,
                       const std::set<std::size_t>& auth_sites) {
  const auto from_def = reach_from(cfg, def, {});
  for (const std::size_t a : auth_sites) {
    if (a < from_def.size() && from_def[a] && a != use_index && reaches(cfg, a, use_index))
      return true;
  }
  return false;
}

}  // namespace xara::dataflow
