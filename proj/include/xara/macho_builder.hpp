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

// Emits minimal, valid 64-bit Mach-O files for tests and the fixture tool,
// together with the layout the builder chose. The ground truth is recorded
// while writing bytes, independently of the parser.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xara::macho {

struct RawSection {
  std::string segment = "__DATA";
  std::string name;
  std::vector<std::uint8_t> data;
  std::uint32_t flags = 0;
};

struct FixtureSpec {
  std::vector<std::string> selectors;         // referenced from __objc_selrefs
  std::vector<std::string> msgref_selectors;  // referenced from __objc_msgrefs
  std::vector<std::string> imports;           // without the leading underscore
  std::vector<std::string> defined;
  std::size_t dangling_selrefs = 0;
  std::vector<RawSection> extra_sections;
  bool with_symtab = true;
  std::uint32_t cryptid = 0;  // nonzero emits an encrypted LC_ENCRYPTION_INFO_64
  std::int32_t cpu_type = 0x01000007;  // CPU_TYPE_X86_64
};

struct ManifestEntry {
  std::string kind;  // section | selector | import | defined | dangling
  std::string name;
  std::uint64_t address = 0;

  auto operator<=>(const ManifestEntry&) const = default;
};

struct SectionTruth {
  std::string segment;
  std::string name;
  std::uint64_t file_offset = 0;
  std::uint64_t size = 0;
  std::uint64_t vm_addr = 0;
};

struct Fixture {
  std::vector<std::uint8_t> bytes;
  std::vector<SectionTruth> sections;
  std::vector<ManifestEntry> entries;

  // One `kind<TAB>name<TAB>0xaddress` line per entry.
  std::string manifest() const;
};

Fixture build_fixture(const FixtureSpec& spec);

// Wraps thin images into a fat archive (32-bit fat header, 4 KiB aligned).
std::vector<std::uint8_t> build_fat(const std::vector<std::vector<std::uint8_t>>& slices);

std::vector<ManifestEntry> parse_manifest(std::string_view text);

}  // namespace xara::macho
