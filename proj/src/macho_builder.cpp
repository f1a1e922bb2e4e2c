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

#include "xara/macho_builder.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "xara/macho.hpp"

namespace xara::macho {
namespace {

constexpr std::uint64_t kVmBase = 0x100000000ULL;

class Writer {
 public:
  std::vector<std::uint8_t>& bytes() { return out_; }
  std::size_t pos() const { return out_.size(); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void name16(std::string_view s) {
    for (std::size_t i = 0; i < 16; ++i) u8(i < s.size() ? static_cast<std::uint8_t>(s[i]) : 0);
  }
  void raw(const std::vector<std::uint8_t>& v) { out_.insert(out_.end(), v.begin(), v.end()); }
  void align(std::size_t a) {
    while (out_.size() % a) out_.push_back(0);
  }
  void patch32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  void patch64(std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

struct PlannedSection {
  RawSection raw;
  std::vector<std::size_t> pointer_slots;  // offsets in raw.data to patch with string vm addrs
  std::vector<std::string> pointer_targets;
};

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string Fixture::manifest() const {
  std::ostringstream os;
  for (const auto& e : entries) os << e.kind << '\t' << e.name << '\t' << hex(e.address) << '\n';
  return os.str();
}

Fixture build_fixture(const FixtureSpec& spec) {
  Fixture fx;

  // __TEXT,__objc_methname: each distinct selector string once.
  std::vector<std::string> strings;
  auto intern = [&](const std::string& s) {
    for (const auto& t : strings)
      if (t == s) return;
    strings.push_back(s);
  };
  for (const auto& s : spec.selectors) intern(s);
  for (const auto& s : spec.msgref_selectors) intern(s);

  std::vector<PlannedSection> text_sections;
  std::vector<PlannedSection> data_sections;
  std::vector<std::size_t> string_offsets;
  if (!strings.empty()) {
    PlannedSection methname;
    methname.raw = {"__TEXT", "__objc_methname", {}, kSectionCstringLiterals};
    for (const auto& s : strings) {
      string_offsets.push_back(methname.raw.data.size());
      methname.raw.data.insert(methname.raw.data.end(), s.begin(), s.end());
      methname.raw.data.push_back(0);
    }
    text_sections.push_back(std::move(methname));
  }
  if (!spec.selectors.empty() || spec.dangling_selrefs > 0) {
    PlannedSection selrefs;
    selrefs.raw = {"__DATA", "__objc_selrefs", {}, 0x10000005};  // S_LITERAL_POINTERS|no-dead-strip
    for (const auto& s : spec.selectors) {
      selrefs.pointer_slots.push_back(selrefs.raw.data.size());
      selrefs.pointer_targets.push_back(s);
      selrefs.raw.data.resize(selrefs.raw.data.size() + 8);
    }
    for (std::size_t i = 0; i < spec.dangling_selrefs; ++i) {
      selrefs.pointer_slots.push_back(selrefs.raw.data.size());
      selrefs.pointer_targets.push_back({});  // sentinel: dangling
      selrefs.raw.data.resize(selrefs.raw.data.size() + 8);
    }
    data_sections.push_back(std::move(selrefs));
  }
  if (!spec.msgref_selectors.empty()) {
    PlannedSection msgrefs;
    msgrefs.raw = {"__DATA", "__objc_msgrefs", {}, 0};
    for (const auto& s : spec.msgref_selectors) {
      msgrefs.raw.data.resize(msgrefs.raw.data.size() + 8);  // imp, left zero
      msgrefs.pointer_slots.push_back(msgrefs.raw.data.size());
      msgrefs.pointer_targets.push_back(s);
      msgrefs.raw.data.resize(msgrefs.raw.data.size() + 8);
    }
    data_sections.push_back(std::move(msgrefs));
  }
  for (const auto& extra : spec.extra_sections) {
    PlannedSection p;
    p.raw = extra;
    (extra.segment == "__TEXT" ? text_sections : data_sections).push_back(std::move(p));
  }

  const std::size_t n_text = text_sections.size();
  const std::size_t n_data = data_sections.size();
  const std::uint32_t seg_text_size =
      static_cast<std::uint32_t>(kSegmentCommandSize + n_text * kSectionSize);
  const std::uint32_t seg_data_size =
      static_cast<std::uint32_t>(kSegmentCommandSize + n_data * kSectionSize);
  std::uint32_t ncmds = 2;
  std::uint32_t sizeofcmds = seg_text_size + seg_data_size;
  if (spec.with_symtab) {
    ++ncmds;
    sizeofcmds += kSymtabCommandSize;
  }
  if (spec.cryptid != 0) {
    ++ncmds;
    sizeofcmds += 24;
  }

  Writer w;
  w.u32(kMagic64);
  w.u32(static_cast<std::uint32_t>(spec.cpu_type));
  w.u32(3);  // cpusubtype
  w.u32(2);  // MH_EXECUTE
  w.u32(ncmds);
  w.u32(sizeofcmds);
  w.u32(0);
  w.u32(0);

  auto emit_segment = [&](std::string_view segname, std::vector<PlannedSection>& secs,
                          std::vector<std::size_t>& sect_hdr_at) {
    const std::size_t at = w.pos();
    w.u32(kLcSegment64);
    w.u32(static_cast<std::uint32_t>(kSegmentCommandSize + secs.size() * kSectionSize));
    w.name16(segname);
    for (int i = 0; i < 4; ++i) w.u64(0);  // vmaddr, vmsize, fileoff, filesize patched later
    w.u32(7);
    w.u32(5);
    w.u32(static_cast<std::uint32_t>(secs.size()));
    w.u32(0);
    for (auto& s : secs) {
      sect_hdr_at.push_back(w.pos());
      w.name16(s.raw.name);
      w.name16(s.raw.segment);
      w.u64(0);  // addr
      w.u64(s.raw.data.size());
      w.u32(0);  // offset
      w.u32(3);
      w.u32(0);
      w.u32(0);
      w.u32(s.raw.flags);
      w.u32(0);
      w.u32(0);
      w.u32(0);
    }
    return at;
  };

  std::vector<std::size_t> text_hdrs, data_hdrs;
  const std::size_t text_cmd = emit_segment("__TEXT", text_sections, text_hdrs);
  const std::size_t data_cmd = emit_segment("__DATA", data_sections, data_hdrs);
  std::size_t symtab_cmd = 0;
  if (spec.with_symtab) {
    symtab_cmd = w.pos();
    w.u32(kLcSymtab);
    w.u32(kSymtabCommandSize);
    w.u32(0);
    w.u32(0);
    w.u32(0);
    w.u32(0);
  }
  if (spec.cryptid != 0) {
    w.u32(kLcEncryptionInfo64);
    w.u32(24);
    w.u32(0);
    w.u32(0);
    w.u32(spec.cryptid);
    w.u32(0);
  }

  // Section payloads; vm address = base + file offset throughout.
  auto place = [&](std::vector<PlannedSection>& secs, std::vector<std::size_t>& hdrs,
                   std::size_t cmd_at) {
    w.align(16);
    const std::size_t seg_start = w.pos();
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < secs.size(); ++i) {
      w.align(8);
      offsets.push_back(w.pos());
      w.raw(secs[i].raw.data);
      w.patch64(hdrs[i] + 32, kVmBase + offsets.back());
      w.patch32(hdrs[i] + 48, static_cast<std::uint32_t>(offsets.back()));
      fx.sections.push_back({secs[i].raw.segment, secs[i].raw.name, offsets.back(),
                             secs[i].raw.data.size(), kVmBase + offsets.back()});
    }
    const std::size_t seg_end = w.pos();
    w.patch64(cmd_at + 24, kVmBase + seg_start);
    w.patch64(cmd_at + 32, seg_end - seg_start);
    w.patch64(cmd_at + 40, seg_start);
    w.patch64(cmd_at + 48, seg_end - seg_start);
    return offsets;
  };
  const auto text_offsets = place(text_sections, text_hdrs, text_cmd);
  const auto data_offsets = place(data_sections, data_hdrs, data_cmd);

  std::uint64_t methname_vm = 0;
  if (!strings.empty()) methname_vm = kVmBase + text_offsets[0];
  auto string_vm = [&](const std::string& s) -> std::uint64_t {
    for (std::size_t i = 0; i < strings.size(); ++i)
      if (strings[i] == s) return methname_vm + string_offsets[i];
    throw std::logic_error("unknown fixture string");
  };

  std::size_t dangle_index = 0;
  for (std::size_t si = 0; si < data_sections.size(); ++si) {
    const auto& ps = data_sections[si];
    for (std::size_t k = 0; k < ps.pointer_slots.size(); ++k) {
      std::uint64_t target;
      if (ps.pointer_targets[k].empty()) {
        target = 0xdead0000ULL + 0x100 * dangle_index++;  // below the image base
        fx.entries.push_back({"dangling", ps.raw.segment + "," + ps.raw.name + "[" +
                                              std::to_string(ps.pointer_slots[k] / 8) + "]",
                              target});
      } else {
        target = string_vm(ps.pointer_targets[k]);
        fx.entries.push_back({"selector", ps.pointer_targets[k], target});
      }
      w.patch64(data_offsets[si] + ps.pointer_slots[k], target);
    }
  }

  if (spec.with_symtab) {
    w.align(8);
    const std::size_t symoff = w.pos();
    std::vector<std::uint8_t> strtab{0};
    std::uint32_t index = 0;
    auto add_symbol = [&](const std::string& name, std::uint8_t type, std::uint8_t sect,
                          std::uint64_t value) {
      const std::uint32_t strx = static_cast<std::uint32_t>(strtab.size());
      strtab.push_back('_');
      strtab.insert(strtab.end(), name.begin(), name.end());
      strtab.push_back(0);
      w.u32(strx);
      w.u8(type);
      w.u8(sect);
      w.u16(0);
      w.u64(value);
      ++index;
    };
    for (const auto& d : spec.defined) {
      fx.entries.push_back({"defined", d, index});
      add_symbol(d, 0x0f, 1, kVmBase);
    }
    for (const auto& imp : spec.imports) {
      fx.entries.push_back({"import", imp, index});
      add_symbol(imp, 0x01, 0, 0);
    }
    const std::size_t stroff = w.pos();
    w.raw(strtab);
    w.patch32(symtab_cmd + 8, static_cast<std::uint32_t>(symoff));
    w.patch32(symtab_cmd + 12, index);
    w.patch32(symtab_cmd + 16, static_cast<std::uint32_t>(stroff));
    w.patch32(symtab_cmd + 20, static_cast<std::uint32_t>(strtab.size()));
  }

  for (const auto& s : fx.sections) {
    fx.entries.insert(fx.entries.begin(), {"section", s.segment + "," + s.name, s.file_offset});
  }
  fx.bytes = std::move(w.bytes());
  return fx;
}

std::vector<std::uint8_t> build_fat(const std::vector<std::vector<std::uint8_t>>& slices) {
  std::vector<std::uint8_t> out;
  auto be32 = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  be32(kFatMagic);
  be32(static_cast<std::uint32_t>(slices.size()));
  std::uint64_t next = 4096;
  std::vector<std::uint64_t> offsets;
  for (const auto& s : slices) {
    offsets.push_back(next);
    next += (s.size() + 4095) / 4096 * 4096;
  }
  for (std::size_t i = 0; i < slices.size(); ++i) {
    std::uint32_t cpu = 0x01000007;
    if (slices[i].size() >= 8)
      cpu = slices[i][4] | (slices[i][5] << 8) | (slices[i][6] << 16) |
            (static_cast<std::uint32_t>(slices[i][7]) << 24);
    be32(cpu);
    be32(3);
    be32(static_cast<std::uint32_t>(offsets[i]));
    be32(static_cast<std::uint32_t>(slices[i].size()));
    be32(12);
  }
  for (std::size_t i = 0; i < slices.size(); ++i) {
    out.resize(offsets[i], 0);
    out.insert(out.end(), slices[i].begin(), slices[i].end());
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw std::invalid_argument("bad manifest line: " + line);
    out.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                   std::stoull(line.substr(t2 + 1), nullptr, 0)});
  }
  return out;
}

}  // namespace xara::macho
