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

#include "xara/macho.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

namespace xara::macho {
namespace {

using Kind = MachOError::Kind;

// Bounds-checked little/big-endian reads over an immutable byte view.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t size() const { return data_.size(); }

  bool fits(std::uint64_t off, std::uint64_t len) const {
    return off <= data_.size() && len <= data_.size() - off;
  }

  void require(std::uint64_t off, std::uint64_t len, const char* what) const {
    if (!fits(off, len)) {
      throw MachOError(Kind::kTruncated, std::string("truncated: ") + what + " at offset " +
                                             std::to_string(off) + " (+" + std::to_string(len) +
                                             ") exceeds " + std::to_string(data_.size()) +
                                             " bytes");
    }
  }

  template <typename T>
  T le(std::uint64_t off, const char* what) const {
    require(off, sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(data_[off + i]) << (8 * i));
    }
    return v;
  }

  std::uint32_t be32(std::uint64_t off, const char* what) const {
    require(off, 4, what);
    return (std::uint32_t{data_[off]} << 24) | (std::uint32_t{data_[off + 1]} << 16) |
           (std::uint32_t{data_[off + 2]} << 8) | std::uint32_t{data_[off + 3]};
  }

  std::uint64_t be64(std::uint64_t off, const char* what) const {
    return (std::uint64_t{be32(off, what)} << 32) | be32(off + 4, what);
  }

  // 16-byte, possibly non-terminated name field.
  std::string fixed_name(std::uint64_t off, const char* what) const {
    require(off, 16, what);
    std::size_t n = 0;
    while (n < 16 && data_[off + n] != 0) ++n;
    return std::string(reinterpret_cast<const char*>(data_.data() + off), n);
  }

 private:
  std::span<const std::uint8_t> data_;
};

bool span_within(std::uint64_t off, std::uint64_t len, std::uint64_t outer_off,
                 std::uint64_t outer_len) {
  if (off < outer_off) return false;
  const std::uint64_t rel = off - outer_off;
  return rel <= outer_len && len <= outer_len - rel;
}

void parse_segment(const Reader& r, std::uint64_t off, std::uint32_t cmdsize, MachOImage& img) {
  if (cmdsize < kSegmentCommandSize) {
    throw MachOError(Kind::kMalformedLoadCommand, "LC_SEGMENT_64 smaller than its header");
  }
  Segment seg;
  seg.name = r.fixed_name(off + 8, "segment name");
  seg.vm_addr = r.le<std::uint64_t>(off + 24, "segment vmaddr");
  seg.vm_size = r.le<std::uint64_t>(off + 32, "segment vmsize");
  seg.file_offset = r.le<std::uint64_t>(off + 40, "segment fileoff");
  seg.file_size = r.le<std::uint64_t>(off + 48, "segment filesize");
  const std::uint32_t nsects = r.le<std::uint32_t>(off + 64, "segment nsects");
  if (std::uint64_t{nsects} * kSectionSize > cmdsize - kSegmentCommandSize) {
    throw MachOError(Kind::kMalformedLoadCommand,
                     "segment " + seg.name + " declares " + std::to_string(nsects) +
                         " sections that do not fit in its load command");
  }
  r.require(seg.file_offset, seg.file_size, "segment file range");

  for (std::uint32_t i = 0; i < nsects; ++i) {
    const std::uint64_t so = off + kSegmentCommandSize + std::uint64_t{i} * kSectionSize;
    Section s;
    s.section_name = r.fixed_name(so, "section name");
    s.segment_name = r.fixed_name(so + 16, "section segment name");
    s.vm_addr = r.le<std::uint64_t>(so + 32, "section addr");
    s.size = r.le<std::uint64_t>(so + 40, "section size");
    s.file_offset = r.le<std::uint32_t>(so + 48, "section offset");
    s.flags = r.le<std::uint32_t>(so + 64, "section flags");
    if (!s.has_file_data()) {
      s.file_offset = 0;
    } else if (s.size > 0) {
      r.require(s.file_offset, s.size, "section data");
      if (!span_within(s.file_offset, s.size, seg.file_offset, seg.file_size)) {
        throw MachOError(Kind::kMalformedLoadCommand,
                         "section " + s.segment_name + "," + s.section_name +
                             " extends beyond segment " + seg.name);
      }
    }
    seg.sections.push_back(img.sections.size());
    img.sections.push_back(std::move(s));
  }
  img.segments.push_back(std::move(seg));
}

void parse_symtab(const Reader& r, std::uint64_t off, std::uint32_t cmdsize, MachOImage& img) {
  if (cmdsize < kSymtabCommandSize) {
    throw MachOError(Kind::kMalformedLoadCommand, "LC_SYMTAB smaller than its header");
  }
  if (img.symtab) {
    throw MachOError(Kind::kMalformedLoadCommand, "duplicate LC_SYMTAB");
  }
  SymtabInfo st;
  st.symoff = r.le<std::uint32_t>(off + 8, "symoff");
  st.nsyms = r.le<std::uint32_t>(off + 12, "nsyms");
  st.stroff = r.le<std::uint32_t>(off + 16, "stroff");
  st.strsize = r.le<std::uint32_t>(off + 20, "strsize");
  r.require(st.symoff, std::uint64_t{st.nsyms} * kNlistSize, "symbol table");
  r.require(st.stroff, st.strsize, "string table");
  img.symtab = st;
}

MachOImage parse_thin(std::span<const std::uint8_t> bytes, std::uint64_t slice_offset) {
  const Reader r(bytes);
  if (r.size() < 4) {
    throw MachOError(Kind::kTruncated, "truncated: input too short for a Mach-O magic");
  }
  const std::uint32_t magic = r.le<std::uint32_t>(0, "magic");
  if (magic == kMagic32 || magic == kCigam32) {
    throw MachOError(Kind::kBadMagic,
                     "32-bit Mach-O images are not supported; only 64-bit little-endian "
                     "images are analyzed");
  }
  if (magic == kCigam64) {
    throw MachOError(Kind::kBadMagic, "big-endian 64-bit Mach-O images are not supported");
  }
  if (magic != kMagic64) {
    throw MachOError(Kind::kBadMagic, "not a Mach-O file (bad magic)");
  }
  r.require(0, kHeaderSize, "mach_header_64");

  MachOImage img;
  img.magic = magic;
  img.cpu_type = static_cast<std::int32_t>(r.le<std::uint32_t>(4, "cputype"));
  img.slice_offset = slice_offset;
  const std::uint32_t ncmds = r.le<std::uint32_t>(16, "ncmds");
  const std::uint32_t sizeofcmds = r.le<std::uint32_t>(20, "sizeofcmds");
  r.require(kHeaderSize, sizeofcmds, "load commands");

  const std::uint64_t end = kHeaderSize + std::uint64_t{sizeofcmds};
  std::uint64_t off = kHeaderSize;
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < ncmds; ++i) {
    if (end - off < 8) {
      throw MachOError(Kind::kMalformedLoadCommand,
                       "load command " + std::to_string(i) + " starts past sizeofcmds");
    }
    const std::uint32_t cmd = r.le<std::uint32_t>(off, "cmd");
    const std::uint32_t cmdsize = r.le<std::uint32_t>(off + 4, "cmdsize");
    if (cmdsize < 8 || cmdsize > end - off) {
      throw MachOError(Kind::kMalformedLoadCommand,
                       "load command " + std::to_string(i) + " has invalid cmdsize " +
                           std::to_string(cmdsize));
    }
    img.load_commands.push_back({cmd, cmdsize, off});
    switch (cmd) {
      case kLcSegment64:
        parse_segment(r, off, cmdsize, img);
        break;
      case kLcSymtab:
        parse_symtab(r, off, cmdsize, img);
        break;
      case kLcEncryptionInfo:
      case kLcEncryptionInfo64: {
        if (cmdsize < 20) {
          throw MachOError(Kind::kMalformedLoadCommand, "encryption info command too small");
        }
        const std::uint32_t cryptid = r.le<std::uint32_t>(off + 16, "cryptid");
        if (cryptid != 0) {
          img.encryption_flag = true;
          throw MachOError(Kind::kEncrypted,
                           "image is encrypted (cryptid " + std::to_string(cryptid) +
                               "); decrypt the binary with an external tool first, "
                               "decryption is out of scope");
        }
        break;
      }
      default:
        break;
    }
    off += cmdsize;
    total += cmdsize;
  }
  if (total != sizeofcmds) {
    throw MachOError(Kind::kMalformedLoadCommand,
                     "load command sizes sum to " + std::to_string(total) +
                         " but header declares " + std::to_string(sizeofcmds));
  }
  img.bytes = std::make_shared<const std::vector<std::uint8_t>>(bytes.begin(), bytes.end());
  return img;
}

bool is_cstring_section(const Section& s) {
  return s.section_name == "__objc_methname" || s.section_name == "__cstring" ||
         (s.flags & kSectionTypeMask) == kSectionCstringLiterals;
}

}  // namespace

std::string_view to_string(MachOError::Kind k) {
  switch (k) {
    case Kind::kBadMagic: return "BadMagic";
    case Kind::kTruncated: return "Truncated";
    case Kind::kEncrypted: return "Encrypted";
    case Kind::kMalformedLoadCommand: return "MalformedLoadCommand";
    case Kind::kMalformedSymtab: return "MalformedSymtab";
  }
  return "Unknown";
}

bool Section::has_file_data() const {
  const std::uint32_t type = flags & kSectionTypeMask;
  return type != 0x1 && type != 0xc && type != 0x12;  // S_ZEROFILL variants
}

const Section* MachOImage::find_section(std::string_view segment,
                                        std::string_view section) const {
  for (const auto& s : sections) {
    if (s.segment_name == segment && s.section_name == section) return &s;
  }
  return nullptr;
}

std::span<const std::uint8_t> MachOImage::section_bytes(const Section& s) const {
  if (!bytes || !s.has_file_data()) return {};
  // parse_thin validated the range.
  return std::span<const std::uint8_t>(*bytes).subspan(s.file_offset, s.size);
}

std::set<std::string> SelectorTable::names() const {
  std::set<std::string> out;
  for (const auto& s : selectors) out.insert(s.name);
  return out;
}

bool ChannelUsage::any_present() const {
  return std::any_of(channels.begin(), channels.end(),
                     [](const auto& kv) { return kv.second.present; });
}

std::vector<MachOImage> parse_image(std::span<const std::uint8_t> bytes) {
  const Reader r(bytes);
  if (r.size() < 4) {
    throw MachOError(Kind::kTruncated, "truncated: input too short for a Mach-O magic");
  }
  const std::uint32_t be_magic = r.be32(0, "magic");
  if (be_magic != kFatMagic && be_magic != kFatMagic64) {
    std::vector<MachOImage> out;
    out.push_back(parse_thin(bytes, 0));
    return out;
  }

  const bool wide = be_magic == kFatMagic64;
  const std::uint32_t nfat = r.be32(4, "nfat_arch");
  const std::uint64_t entry = wide ? 32 : 20;
  r.require(8, std::uint64_t{nfat} * entry, "fat_arch table");

  std::vector<MachOImage> out;
  for (std::uint32_t i = 0; i < nfat; ++i) {
    const std::uint64_t ao = 8 + std::uint64_t{i} * entry;
    const std::uint64_t off = wide ? r.be64(ao + 8, "fat offset") : r.be32(ao + 8, "fat offset");
    const std::uint64_t size = wide ? r.be64(ao + 16, "fat size") : r.be32(ao + 12, "fat size");
    r.require(off, size, "fat slice");
    const auto slice = bytes.subspan(off, size);
    if (slice.size() >= 4) {
      const std::uint32_t m = Reader(slice).le<std::uint32_t>(0, "slice magic");
      if (m == kMagic32 || m == kCigam32) continue;
    }
    out.push_back(parse_thin(slice, off));
  }
  if (out.empty()) {
    throw MachOError(Kind::kBadMagic, "fat file contains no 64-bit slice");
  }
  return out;
}

SelectorTable extract_selectors(const MachOImage& image) {
  SelectorTable table;
  std::vector<const Section*> strings;
  for (const auto& s : image.sections) {
    if (is_cstring_section(s) && s.has_file_data()) strings.push_back(&s);
  }

  auto resolve = [&](const std::string& from, std::size_t entry, std::uint64_t ptr) {
    for (const Section* s : strings) {
      if (ptr < s->vm_addr || ptr - s->vm_addr >= s->size) continue;
      const auto data = image.section_bytes(*s);
      const std::size_t start = ptr - s->vm_addr;
      const auto nul = std::find(data.begin() + start, data.end(), std::uint8_t{0});
      if (nul == data.end()) {
        table.dangling.push_back({from, entry, ptr, "selector string is not NUL-terminated"});
      } else if (nul == data.begin() + start) {
        table.dangling.push_back({from, entry, ptr, "empty selector string"});
      } else {
        table.selectors.insert({std::string(data.begin() + start, nul), ptr});
      }
      return;
    }
    table.dangling.push_back({from, entry, ptr, "pointer outside any C-string section"});
  };

  for (const auto& s : image.sections) {
    std::size_t stride = 0;
    std::size_t sel_at = 0;
    if (s.section_name == "__objc_selrefs") {
      stride = 8;
    } else if (s.section_name == "__objc_msgrefs") {
      stride = 16;  // (imp, selector)
      sel_at = 8;
    } else {
      continue;
    }
    const auto data = image.section_bytes(s);
    const Reader rr(data);
    const std::string from = s.segment_name + "," + s.section_name;
    const std::size_t n = data.size() / stride;
    for (std::size_t i = 0; i < n; ++i) {
      resolve(from, i, rr.le<std::uint64_t>(i * stride + sel_at, "selector reference"));
    }
    if (data.size() % stride != 0) {
      table.dangling.push_back({from, n, 0, "partial trailing entry"});
    }
  }
  return table;
}

SymbolTable extract_imports(const MachOImage& image) {
  SymbolTable table;
  if (!image.symtab || !image.bytes) return table;
  const SymtabInfo& st = *image.symtab;
  const Reader r(*image.bytes);
  const auto strtab = std::span<const std::uint8_t>(*image.bytes).subspan(st.stroff, st.strsize);

  for (std::uint32_t i = 0; i < st.nsyms; ++i) {
    const std::uint64_t off = st.symoff + std::uint64_t{i} * kNlistSize;
    const std::uint32_t strx = r.le<std::uint32_t>(off, "n_strx");
    const std::uint8_t type = r.le<std::uint8_t>(off + 4, "n_type");
    if (type & 0xe0) continue;  // debugger stab
    if (strx >= strtab.size()) {
      throw MachOError(Kind::kMalformedSymtab, "symbol " + std::to_string(i) +
                                                   " has string index " + std::to_string(strx) +
                                                   " beyond the string table");
    }
    const auto nul = std::find(strtab.begin() + strx, strtab.end(), std::uint8_t{0});
    if (nul == strtab.end()) {
      throw MachOError(Kind::kMalformedSymtab,
                       "symbol " + std::to_string(i) + " name is not NUL-terminated");
    }
    std::string name(strtab.begin() + strx, nul);
    if (name.empty()) continue;
    if (name.front() == '_') name.erase(0, 1);
    if (name.empty()) continue;
    const bool undefined = (type & 0x0e) == 0;
    const bool external = (type & 0x01) != 0;
    if (undefined && external) {
      table.imported.insert(std::move(name));
    } else if (!undefined) {
      table.defined.insert(std::move(name));
    }
  }
  return table;
}

ChannelUsage quick_scan(const SelectorTable& selectors, const SymbolTable& symbols,
                        const rules::RuleSet& rules) {
  ChannelUsage usage;
  for (const auto& [id, rule] : rules.rules) {
    std::set<std::string> matched;
    auto consider = [&](const rules::ApiSig& sig) {
      if (sig.name == "*") return;
      if (sig.kind == rules::ApiKind::kCSymbol) {
        if (symbols.imported.count(sig.name)) matched.insert(sig.name);
      } else if (sig.kind == rules::ApiKind::kObjcSelector) {
        for (const auto& s : selectors.selectors) {
          if (rules::selector_matches(sig.name, s.name)) matched.insert(s.name);
        }
      }
    };
    for (const auto& sig : rule.claims) consider(sig);
    for (const auto& sig : rule.uses) consider(sig);
    ChannelPresence p;
    p.present = !matched.empty();
    p.matched_names.assign(matched.begin(), matched.end());
    usage.channels[id] = std::move(p);
  }
  return usage;
}

ChannelUsage quick_scan(const MachOImage& image, const rules::RuleSet& rules) {
  return quick_scan(extract_selectors(image), extract_imports(image), rules);
}

}  // namespace xara::macho
