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

// Per-procedure control-flow graphs, call-site argument bindings and the
// inter-procedural call graph.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xara/ir.hpp"

namespace xara::cfg {

using BlockId = std::size_t;

struct BasicBlock {
  BlockId id = 0;
  std::size_t start = 0;  // [start, end)
  std::size_t end = 0;
  std::vector<BlockId> successors;
};

struct Cfg {
  std::string procedure;
  std::vector<ir::Instruction> code;
  std::vector<BasicBlock> blocks;
  BlockId entry = 0;

  BlockId block_of(std::size_t instruction) const;
  // Instruction-level successors derived from the block graph.
  std::vector<std::size_t> instruction_successors(std::size_t instruction) const;
  bool is_leader(std::size_t instruction) const;

 private:
  friend Cfg build_cfg(const ir::Procedure& proc);
  std::vector<BlockId> owner_;
};

Cfg build_cfg(const ir::Procedure& proc);

std::set<BlockId> reachable_blocks(const Cfg& cfg);

// Graphviz text of blocks and edges.
std::string to_dot(const Cfg& cfg);

// Argument bindings of a call: the Arg/ArgAddr instructions of the call's
// basic block after the previous call, latest per position.
struct CallBindings {
  std::map<int, std::size_t> by_position;  // position -> Arg/ArgAddr instruction index

  std::optional<std::size_t> at(int position) const;
  // Highest position bound by an ArgAddr.
  std::optional<int> last_outparam(const Cfg& cfg) const;
};

CallBindings call_bindings(const Cfg& cfg, std::size_t call_index);

// Selector literal held by the Arg(1) of an objc dispatch call, by constant
// propagation from the start of the call's block. nullopt when not provable.
std::optional<std::string> resolve_selector(const Cfg& cfg, std::size_t call_index);
// String literal held by the Arg at `position`, by the same propagation.
std::optional<std::string> resolve_string(const Cfg& cfg, std::size_t call_index, int position);

struct CallEdge {
  std::string caller;
  std::size_t site = 0;
  std::string callee;

  auto operator<=>(const CallEdge&) const = default;
};

struct AmbiguousCall {
  std::string caller;
  std::size_t site = 0;
  std::string selector;
  std::vector<std::string> candidates;
};

struct CallGraph {
  std::vector<std::string> nodes;
  std::vector<CallEdge> edges;
  std::vector<AmbiguousCall> ambiguous;

  std::optional<std::string> callee_at(const std::string& caller, std::size_t site) const;
};

CallGraph build_callgraph(const ir::Listing& listing);
CallGraph build_callgraph(const ir::Listing& listing, const std::vector<Cfg>& cfgs);

}  // namespace xara::cfg
