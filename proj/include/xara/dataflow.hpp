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

// Define-use chains from a claimed channel reference: a forward
// may-analysis over register and frame-slot copies, plus the all-paths
// authentication query over the same control-flow graph.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xara/cfg.hpp"
#include "xara/ir.hpp"

namespace xara::dataflow {

// Definition of a reference. `index` is the defining instruction; the
// reference is held by `location` right after it executes. A site without
// an index is a synthetic parameter definition at procedure entry.
struct RefSite {
  std::string procedure;
  std::optional<std::size_t> index;
  ir::Location location;

  bool operator==(const RefSite&) const = default;
};

// Reference carriers are the claimed object itself; derived carriers were
// produced from it by a derivation call (e.g. item -> access object).
enum class Tag { kReference, kDerived };

struct Carrier {
  ir::Location location;
  Tag tag = Tag::kReference;

  auto operator<=>(const Carrier&) const = default;
};

// A carrier passed to a call through Arg (by value) or ArgAddr (by address).
struct Use {
  std::size_t arg_index = 0;
  std::size_t call_index = 0;
  int position = 0;
  ir::Location via;
  Tag tag = Tag::kReference;
  bool by_address = false;

  auto operator<=>(const Use&) const = default;
};

// A call that produces a derived carrier when argument `input` carries the
// reference (or an earlier derived carrier).
struct Derivation {
  int input = 0;
  enum class Output { kReturnValue, kOutParam } output = Output::kReturnValue;
  int output_position = 0;  // ArgAddr position for kOutParam
};

struct ChainOptions {
  std::map<std::size_t, Derivation> derivations;  // keyed by call index
};

struct DefUseChain {
  RefSite def;
  std::vector<Use> uses;
  std::vector<std::size_t> kills;
  // Carriers that may hold the reference before each instruction; empty for
  // instructions the reference never reaches.
  std::vector<std::set<Carrier>> carriers;
  std::size_t iterations = 0;  // block evaluations until the fixpoint

  // Tags that may reach argument `position` of the call at `call_index`.
  std::set<Tag> tags_at(std::size_t call_index, int position) const;
  std::vector<Use> uses_at(std::size_t call_index) const;
};

class DataflowError : public Error {
 public:
  enum class Kind { kUnreachableDef };
  DataflowError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

DefUseChain compute_chain(const cfg::Cfg& cfg, const RefSite& def,
                          const ChainOptions& options = {});

// True iff every path from the definition to `use_index` passes through at
// least one instruction in `auth_sites`. Paths start after the definition
// and do not re-enter it.
bool auth_on_all_paths(const cfg::Cfg& cfg, const RefSite& def, std::size_t use_index,
                       const std::set<std::size_t>& auth_sites);

// True iff some auth site is reachable from the definition and reaches the use.
bool auth_on_some_path(const cfg::Cfg& cfg, const RefSite& def, std::size_t use_index,
                       const std::set<std::size_t>& auth_sites);

}  // namespace xara::dataflow
