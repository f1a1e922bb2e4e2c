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

// Mach-O container parsing for the quick-scan stage: load commands,
// segments, sections, the symbol table, and Objective-C selector
// references. Only 64-bit little-endian images are accepted; fat files are
// split into their 64-bit slices.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xara/common.hpp"
#include "xara/rules.hpp"

namespace xara::macho {

inline constexpr std::uint32_t kMagic64 = 0xfeedfacf;
inline constexpr std::uint32_t kCigam64 = 0xcffaedfe;
inline constexpr std::uint32_t kMagic32 = 0xfeedface;
inline constexpr std::uint32_t kCigam32 = 0xcefaedfe;
inline constexpr std::uint32_t kFatMagic = 0xcafebabe;
inline constexpr std::uint32_t kFatMagic64 = 0xcafebabf;

inline constexpr std::uint32_t kLcSymtab = 0x2;
inline constexpr std::uint32_t kLcSegment64 = 0x19;
inline constexpr std::uint32_t kLcEncryptionInfo = 0x21;
inline constexpr std::uint32_t kLcEncryptionInfo64 = 0x2c;

inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::size_t kSegmentCommandSize = 72;
inline constexpr std::size_t kSectionSize = 80;
inline constexpr std::size_t kSymtabCommandSize = 24;
inline constexpr std::size_t kNlistSize = 16;

inline constexpr std::uint32_t kSectionTypeMask = 0xff;
inline constexpr std::uint32_t kSectionCstringLiterals = 0x2;

class MachOError : public Error {
 public:
  enum class Kind { kBadMagic, kTruncated, kEncrypted, kMalformedLoadCommand, kMalformedSymtab };

  MachOError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(MachOError::Kind k);

struct LoadCommand {
  std::uint32_t cmd = 0;
  std::uint32_t size = 0;
  std::uint64_t offset = 0;  // relative to the image start
};

struct Section {
  std::string segment_name;
  std::string section_name;
  std::uint64_t file_offset = 0;
  std::uint64_t size = 0;
  std::uint64_t vm_addr = 0;
  std::uint32_t flags = 0;

  // Zero-fill sections occupy no file bytes.
  bool has_file_data() const;
};

struct Segment {
  std::string name;
  std::uint64_t vm_addr = 0;
  std::uint64_t vm_size = 0;
  std::uint64_t file_offset = 0;
  std::uint64_t file_size = 0;
  std::vector<std::size_t> sections;  // indices into MachOImage::sections
};

struct SymbolTable {
  std::set<std::string> imported;
  std::set<std::string> defined;

  bool operator==(const SymbolTable&) const = default;
};

// Location of the LC_SYMTAB tables; decoded lazily by extract_imports.
struct SymtabInfo {
  std::uint32_t symoff = 0;
  std::uint32_t nsyms = 0;
  std::uint32_t stroff = 0;
  std::uint32_t strsize = 0;
};

struct MachOImage {
  std::uint32_t magic = 0;
  std::int32_t cpu_type = 0;
  std::uint64_t slice_offset = 0;  // position of the image within the input file
  std::vector<LoadCommand> load_commands;
  std::vector<Segment> segments;
  std::vector<Section> sections;
  std::optional<SymtabInfo> symtab;
  bool encryption_flag = false;
  std::shared_ptr<const std::vector<std::uint8_t>> bytes;  // the image slice

  const Section* find_section(std::string_view segment, std::string_view section) const;
  std::span<const std::uint8_t> section_bytes(const Section& s) const;
};

struct Selector {
  std::string name;
  std::uint64_t address = 0;  // vm address of the string

  auto operator<=>(const Selector&) const = default;
};

struct SelectorWarning {
  std::string section;      // the reference section the bad entry came from
  std::size_t entry = 0;    // entry index within that section
  std::uint64_t pointer = 0;
  std::string reason;
};

struct SelectorTable {
  std::set<Selector> selectors;
  std::vector<SelectorWarning> dangling;

  std::set<std::string> names() const;
};

struct ChannelPresence {
  bool present = false;
  std::vector<std::string> matched_names;

  bool operator==(const ChannelPresence&) const = default;
};

struct ChannelUsage {
  std::map<rules::ChannelId, ChannelPresence> channels;

  bool any_present() const;
  bool operator==(const ChannelUsage&) const = default;
};

// Parses a thin or fat file. Thin input yields one image; fat input yields
// every 64-bit slice in archive order. Throws MachOError.
std::vector<MachOImage> parse_image(std::span<const std::uint8_t> bytes);

// Selector references from __objc_selrefs and __objc_msgrefs. Entries that
// do not resolve into a C-string section are recorded in `dangling`.
SelectorTable extract_selectors(const MachOImage& image);

// Undefined external symbols have their leading underscore stripped.
// Throws MachOError(kMalformedSymtab) on out-of-range string indices.
SymbolTable extract_imports(const MachOImage& image);

ChannelUsage quick_scan(const SelectorTable& selectors, const SymbolTable& symbols,
                        const rules::RuleSet& rules);
ChannelUsage quick_scan(const MachOImage& image, const rules::RuleSet& rules);

}  // namespace xara::macho
