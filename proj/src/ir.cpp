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

#include "xara/ir.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace xara::ir {
namespace {

constexpr std::string_view kHeader = "# naif-version: 1";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Cursor over a single source line.
class LineLexer {
 public:
  LineLexer(std::string_view line, int lineno) : s_(line), line_(lineno) {}

  [[noreturn]] void fail(const std::string& msg,
                         NaifError::Kind kind = NaifError::Kind::kSyntax) const {
    throw NaifError(kind, line_, msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  void expect_end() {
    if (!at_end()) fail("unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view word() {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_' || s_[pos_] == '.')) {
      ++pos_;
    }
    if (b == pos_) fail("expected a word");
    return s_.substr(b, pos_ - b);
  }

  std::int64_t integer() {
    skip_ws();
    bool neg = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      neg = s_[pos_] == '-';
      ++pos_;
    }
    int base = 10;
    if (pos_ + 1 < s_.size() && s_[pos_] == '0' && (s_[pos_ + 1] == 'x' || s_[pos_ + 1] == 'X')) {
      base = 16;
      pos_ += 2;
    }
    std::uint64_t mag = 0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    const auto res = std::from_chars(first, last, mag, base);
    if (res.ec != std::errc{} || res.ptr == first) fail("expected an integer");
    pos_ += static_cast<std::size_t>(res.ptr - first);
    const std::uint64_t limit =
        static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + (neg ? 1 : 0);
    if (mag > limit) fail("integer out of range");
    if (neg) return mag == limit ? std::numeric_limits<std::int64_t>::min()
                                 : -static_cast<std::int64_t>(mag);
    return static_cast<std::int64_t>(mag);
  }

  std::string string_literal() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '"') fail("expected a string literal");
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string literal");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '0': out.push_back('\0'); break;
        case 'x': {
          if (pos_ + 2 > s_.size()) fail("bad \\x escape");
          unsigned v = 0;
          const auto r = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 2, v, 16);
          if (r.ec != std::errc{} || r.ptr != s_.data() + pos_ + 2) fail("bad \\x escape");
          out.push_back(static_cast<char>(v));
          pos_ += 2;
          break;
        }
        default:
          fail(std::string("unknown escape '\\") + e + "'");
      }
    }
    return out;
  }

  Location location() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string_view w = word();
    if (w == "rv") return Location::rv();
    if (w == "sp") {
      expect('[');
      const std::int64_t off = integer();
      expect(']');
      if (off < -(std::int64_t{1} << 31) || off > (std::int64_t{1} << 31)) {
        fail("stack offset out of range", NaifError::Kind::kBadLocation);
      }
      return Location::stack(off);
    }
    if (w.size() >= 2 && w.size() <= 3 && w[0] == 'r') {
      int n = -1;
      const auto r = std::from_chars(w.data() + 1, w.data() + w.size(), n);
      if (r.ec == std::errc{} && r.ptr == w.data() + w.size() && n >= 0 && n <= kMaxArgIndex &&
          !(w.size() == 3 && w[1] == '0')) {
        return Location::reg(n);
      }
    }
    pos_ = start;
    fail("bad location '" + std::string(w) + "'", NaifError::Kind::kBadLocation);
  }

  int arg_index() {
    const std::int64_t v = integer();
    if (v < 0 || v > kMaxArgIndex) fail("argument index must be in [0, 15]");
    return static_cast<int>(v);
  }

  std::size_t target() {
    const std::int64_t v = integer();
    if (v < 0) fail("negative branch target", NaifError::Kind::kDanglingBranch);
    return static_cast<std::size_t>(v);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

Instruction parse_instruction(LineLexer& lx) {
  const std::string m(lx.word());
  if (m == "mov") {
    Move ins;
    ins.dst = lx.location();
    lx.expect(',');
    ins.src = lx.location();
    return ins;
  }
  if (m == "sel" || m == "str") {
    const Location dst = lx.location();
    lx.expect(',');
    std::string s = lx.string_literal();
    if (m == "sel") return LoadSel{dst, std::move(s)};
    return LoadStr{dst, std::move(s)};
  }
  if (m == "imm") {
    LoadImm ins;
    ins.dst = lx.location();
    lx.expect(',');
    ins.value = lx.integer();
    return ins;
  }
  if (m == "arg") {
    Arg ins;
    ins.index = lx.arg_index();
    lx.expect(',');
    ins.src = lx.location();
    return ins;
  }
  if (m == "argaddr") {
    ArgAddr ins;
    ins.index = lx.arg_index();
    lx.expect(',');
    ins.slot = lx.location();
    if (!ins.slot.is_stack()) lx.fail("argaddr slot must be a stack location",
                                      NaifError::Kind::kBadLocation);
    return ins;
  }
  if (m == "call") return Call{lx.string_literal()};
  if (m == "jmp") return Jmp{lx.target()};
  if (m == "br") return Br{lx.target()};
  if (m == "ret") return Ret{};
  lx.fail("unknown mnemonic '" + m + "'");
}

std::string hex_byte(unsigned char c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "\\x%02x", c);
  return buf;
}

}  // namespace

NaifError::NaifError(Kind kind, int line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      line_(line) {}

std::string_view to_string(NaifError::Kind k) {
  switch (k) {
    case NaifError::Kind::kSyntax: return "SyntaxError";
    case NaifError::Kind::kDuplicateProc: return "DuplicateProc";
    case NaifError::Kind::kDuplicateIndex: return "DuplicateIndex";
    case NaifError::Kind::kDanglingBranch: return "DanglingBranch";
    case NaifError::Kind::kBadLocation: return "BadLocation";
  }
  return "Unknown";
}

std::string to_string(const Location& loc) {
  if (loc.kind == Location::Kind::kStack) return "sp[" + std::to_string(loc.value) + "]";
  if (loc.value == kReturnRegister) return "rv";
  return "r" + std::to_string(loc.value);
}

std::optional<Location> parse_location(std::string_view text) {
  try {
    LineLexer lx(text, 0);
    const Location loc = lx.location();
    lx.expect_end();
    return loc;
  } catch (const NaifError&) {
    return std::nullopt;
  }
}

bool is_terminator(const Instruction& ins) {
  return std::holds_alternative<Jmp>(ins) || std::holds_alternative<Br>(ins) ||
         std::holds_alternative<Ret>(ins);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (u < 0x20 || u == 0x7f) {
          out += hex_byte(u);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string to_string(const Instruction& ins) {
  return std::visit(
      Overloaded{
          [](const Move& i) { return "mov " + to_string(i.dst) + ", " + to_string(i.src); },
          [](const LoadSel& i) { return "sel " + to_string(i.dst) + ", " + quote(i.selector); },
          [](const LoadStr& i) { return "str " + to_string(i.dst) + ", " + quote(i.literal); },
          [](const LoadImm& i) { return "imm " + to_string(i.dst) + ", " + std::to_string(i.value); },
          [](const Arg& i) { return "arg " + std::to_string(i.index) + ", " + to_string(i.src); },
          [](const ArgAddr& i) {
            return "argaddr " + std::to_string(i.index) + ", " + to_string(i.slot);
          },
          [](const Call& i) { return "call " + quote(i.symbol); },
          [](const Jmp& i) { return "jmp " + std::to_string(i.target); },
          [](const Br& i) { return "br " + std::to_string(i.target); },
          [](const Ret&) { return std::string("ret"); },
      },
      ins);
}

const Procedure* Listing::find(std::string_view name) const {
  for (const auto& p : procedures)
    if (p.name == name) return &p;
  return nullptr;
}

Listing parse_listing(std::string_view text, std::string source_name) {
  Listing listing;
  listing.source_name = std::move(source_name);

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
  if (first == lines.size()) return listing;
  if (trim(lines[first]) != kHeader) {
    throw NaifError(NaifError::Kind::kSyntax, static_cast<int>(first) + 1,
                    "missing '# naif-version: 1' header");
  }

  std::set<std::string> names;
  std::optional<Procedure> current;
  std::vector<int> ins_lines;
  int proc_line = 0;

  auto finish = [&](int line) {
    if (current->instructions.empty()) {
      throw NaifError(NaifError::Kind::kSyntax, line,
                      "procedure \"" + current->name + "\" has no instructions");
    }
    const std::size_t n = current->instructions.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<std::size_t> t;
      if (const auto* j = std::get_if<Jmp>(&current->instructions[i])) t = j->target;
      if (const auto* b = std::get_if<Br>(&current->instructions[i])) t = b->target;
      if (t && *t >= n) {
        throw NaifError(NaifError::Kind::kDanglingBranch, ins_lines[i],
                        "branch target " + std::to_string(*t) + " outside procedure \"" +
                            current->name + "\"");
      }
    }
    listing.procedures.push_back(std::move(*current));
    current.reset();
    ins_lines.clear();
  };

  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    LineLexer lx(lines[li], lineno);
    if (lx.at_end()) continue;

    if (lx.peek('.')) {
      const std::string_view directive = lx.word();
      if (directive == ".proc") {
        if (current) lx.fail("nested .proc (missing .endproc)");
        std::string name = lx.string_literal();
        lx.expect_end();
        if (name.empty()) lx.fail("empty procedure name");
        if (!names.insert(name).second) {
          lx.fail("duplicate procedure \"" + name + "\"", NaifError::Kind::kDuplicateProc);
        }
        current = Procedure{std::move(name), {}};
        proc_line = lineno;
      } else if (directive == ".endproc") {
        lx.expect_end();
        if (!current) lx.fail(".endproc without .proc");
        finish(lineno);
      } else {
        lx.fail("unknown directive '" + std::string(directive) + "'");
      }
      continue;
    }

    if (!current) lx.fail("instruction outside a procedure");
    const std::int64_t idx = lx.integer();
    lx.expect(':');
    const std::size_t expected = current->instructions.size();
    if (idx >= 0 && static_cast<std::size_t>(idx) < expected) {
      lx.fail("index " + std::to_string(idx) + " already defined",
              NaifError::Kind::kDuplicateIndex);
    }
    if (idx < 0 || static_cast<std::size_t>(idx) != expected) {
      lx.fail("expected instruction index " + std::to_string(expected));
    }
    current->instructions.push_back(parse_instruction(lx));
    lx.expect_end();
    ins_lines.push_back(lineno);
  }
  if (current) {
    throw NaifError(NaifError::Kind::kSyntax, proc_line,
                    "procedure \"" + current->name + "\" is missing .endproc");
  }
  return listing;
}

std::string print_procedure(const Procedure& proc) {
  std::ostringstream os;
  os << ".proc " << quote(proc.name) << '\n';
  for (std::size_t i = 0; i < proc.instructions.size(); ++i) {
    os << "  " << i << ": " << to_string(proc.instructions[i]) << '\n';
  }
  os << ".endproc\n";
  return os.str();
}

std::string print_listing(const Listing& listing) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& p : listing.procedures) out += print_procedure(p);
  return out;
}

std::string selector_of(std::string_view name) {
  std::size_t b = 0;
  if (!name.empty() && (name[0] == '-' || name[0] == '+')) b = 1;
  if (name.size() < b + 2 || name[b] != '[' || name.back() != ']') return {};
  const std::string_view inner = name.substr(b + 1, name.size() - b - 2);
  const auto sp = inner.find(' ');
  if (sp == std::string_view::npos) return {};
  return std::string(trim(inner.substr(sp + 1)));
}

}  // namespace xara::ir
