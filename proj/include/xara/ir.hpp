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

// NAIF, the normalized assembly interchange format the deep analyzer reads.
//
//   # naif-version: 1
//   .proc "[ENKeychainHelper saveValue:toKeyChainItem]"
//     0: argaddr 7, sp[-48]
//     1: call "SecKeychainFindGenericPassword"
//     2: ret
//   .endproc
//
// Mnemonics: mov, sel, str, imm, arg, argaddr, call, jmp, br, ret.
// Locations: r0..r15, rv, sp[<signed int>]. `#` starts a comment outside
// string literals. Arg/ArgAddr bind call argument positions 0..15; a call to
// another procedure in the listing receives argument k in register r<k>.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xara/common.hpp"

namespace xara::ir {

inline constexpr int kMaxArgIndex = 15;
inline constexpr int kReturnRegister = 16;  // "rv"

struct Location {
  enum class Kind { kReg, kStack };
  Kind kind = Kind::kReg;
  std::int64_t value = 0;  // register number (0..16) or frame offset

  static Location reg(int r) { return {Kind::kReg, r}; }
  static Location rv() { return {Kind::kReg, kReturnRegister}; }
  static Location stack(std::int64_t off) { return {Kind::kStack, off}; }

  bool is_stack() const { return kind == Kind::kStack; }
  auto operator<=>(const Location&) const = default;
};

std::string to_string(const Location& loc);
std::optional<Location> parse_location(std::string_view text);

struct Move { Location dst, src; bool operator==(const Move&) const = default; };
struct LoadSel { Location dst; std::string selector; bool operator==(const LoadSel&) const = default; };
struct LoadStr { Location dst; std::string literal; bool operator==(const LoadStr&) const = default; };
struct LoadImm { Location dst; std::int64_t value = 0; bool operator==(const LoadImm&) const = default; };
struct Arg { int index = 0; Location src; bool operator==(const Arg&) const = default; };
struct ArgAddr { int index = 0; Location slot; bool operator==(const ArgAddr&) const = default; };
struct Call { std::string symbol; bool operator==(const Call&) const = default; };
struct Jmp { std::size_t target = 0; bool operator==(const Jmp&) const = default; };
struct Br { std::size_t target = 0; bool operator==(const Br&) const = default; };
struct Ret { bool operator==(const Ret&) const = default; };

using Instruction = std::variant<Move, LoadSel, LoadStr, LoadImm, Arg, ArgAddr, Call, Jmp, Br, Ret>;

bool is_terminator(const Instruction& ins);
std::string to_string(const Instruction& ins);

struct Procedure {
  std::string name;
  std::vector<Instruction> instructions;

  bool operator==(const Procedure&) const = default;
};

struct Listing {
  std::string source_name;
  std::vector<Procedure> procedures;

  const Procedure* find(std::string_view name) const;
  // Structural equality ignores source_name.
  bool operator==(const Listing& o) const { return procedures == o.procedures; }
};

class NaifError : public Error {
 public:
  enum class Kind { kSyntax, kDuplicateProc, kDuplicateIndex, kDanglingBranch, kBadLocation };

  NaifError(Kind kind, int line, const std::string& what);
  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

std::string_view to_string(NaifError::Kind k);

Listing parse_listing(std::string_view text, std::string source_name = "<naif>");
// Header line followed by each procedure.
std::string print_listing(const Listing& listing);
// `.proc` line, one line per instruction, `.endproc`.
std::string print_procedure(const Procedure& proc);

// Double-quoted form with backslash escapes, as used by NAIF and rule files.
std::string quote(std::string_view s);

// Selector portion of "[Class selector]" (or "-[Class selector]"); empty if
// the name is not bracketed.
std::string selector_of(std::string_view procedure_name);

}  // namespace xara::ir
