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

#include <gtest/gtest.h>

#include <cstring>

#include "test_support.hpp"
#include "xara/macho.hpp"
#include "xara/macho_builder.hpp"

namespace xara::macho {
namespace {

using testing::Rng;

MachOImage single(const std::vector<std::uint8_t>& bytes) {
  auto images = parse_image(bytes);
  EXPECT_EQ(images.size(), 1u);
  return images.at(0);
}

MachOError::Kind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    const auto images = parse_image(bytes);
    for (const auto& img : images) {
      extract_selectors(img);
      extract_imports(img);
    }
  } catch (const MachOError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a MachOError";
  return MachOError::Kind::kBadMagic;
}

std::set<std::pair<std::string, std::uint64_t>> manifest_of(const std::vector<ManifestEntry>& es,
                                                            const std::string& kind) {
  std::set<std::pair<std::string, std::uint64_t>> out;
  for (const auto& e : es)
    if (e.kind == kind) out.insert({e.name, e.address});
  return out;
}

std::set<std::string> names_of(const std::vector<ManifestEntry>& es, const std::string& kind) {
  std::set<std::string> out;
  for (const auto& e : es)
    if (e.kind == kind) out.insert(e.name);
  return out;
}

TEST(MachOParse, TwoSectionFixtureMatchesRecordedLayout) {
  FixtureSpec spec;
  spec.with_symtab = false;
  spec.extra_sections.push_back({"__TEXT", "__text", {0x90, 0x90, 0xc3}, 0});
  spec.extra_sections.push_back({"__DATA", "__data", {1, 2, 3, 4, 5, 6, 7, 8}, 0});
  const Fixture fx = build_fixture(spec);
  ASSERT_EQ(fx.sections.size(), 2u);
  const MachOImage img = single(fx.bytes);
  ASSERT_EQ(img.sections.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto* s = img.find_section(fx.sections[i].segment, fx.sections[i].name);
    ASSERT_NE(s, nullptr) << fx.sections[i].name;
    EXPECT_EQ(s->file_offset, fx.sections[i].file_offset);
    EXPECT_EQ(s->size, fx.sections[i].size);
    EXPECT_EQ(s->vm_addr, fx.sections[i].vm_addr);
  }
  EXPECT_EQ(img.magic, kMagic64);
  EXPECT_FALSE(img.encryption_flag);
}

TEST(MachOParse, ZeroLengthInputIsTruncated) {
  EXPECT_EQ(error_kind({}), MachOError::Kind::kTruncated);
}

TEST(MachOParse, EncryptedImageIsRejected) {
  FixtureSpec spec;
  spec.cryptid = 1;
  spec.selectors = {"openURL:"};
  const auto bytes = build_fixture(spec).bytes;
  try {
    parse_image(bytes);
    FAIL() << "encrypted image parsed";
  } catch (const MachOError& e) {
    EXPECT_EQ(e.kind(), MachOError::Kind::kEncrypted);
    EXPECT_NE(std::string(e.what()).find("decrypt"), std::string::npos);
  }
}

TEST(MachOParse, CryptIdZeroIsNotEncrypted) {
  FixtureSpec spec;
  spec.selectors = {"openURL:"};
  const auto img = single(build_fixture(spec).bytes);
  EXPECT_FALSE(img.encryption_flag);
}

TEST(MachOParse, ThirtyTwoBitAndBigEndianAreBadMagic) {
  for (const std::uint32_t magic : {kMagic32, kCigam32, kCigam64, 0x12345678u}) {
    auto bytes = build_fixture({}).bytes;
    std::memcpy(bytes.data(), &magic, 4);
    EXPECT_EQ(error_kind(bytes), MachOError::Kind::kBadMagic) << std::hex << magic;
  }
}

TEST(MachOParse, SectionsWithinInputAndSegments) {
  FixtureSpec spec;
  spec.selectors = {"a:", "b:"};
  spec.msgref_selectors = {"c"};
  spec.imports = {"x"};
  const auto bytes = build_fixture(spec).bytes;
  const auto img = single(bytes);
  std::uint64_t total = 0;
  for (const auto& lc : img.load_commands) total += lc.size;
  std::uint32_t declared = 0;
  std::memcpy(&declared, bytes.data() + 20, 4);
  EXPECT_EQ(total, declared);
  for (const auto& seg : img.segments) {
    for (const std::size_t si : seg.sections) {
      const auto& s = img.sections[si];
      EXPECT_LE(s.file_offset + s.size, bytes.size());
      EXPECT_GE(s.file_offset, seg.file_offset);
      EXPECT_LE(s.file_offset + s.size, seg.file_offset + seg.file_size);
    }
  }
}

TEST(MachOParse, TruncatedImage) {
  FixtureSpec spec;
  spec.selectors = {"openURL:"};
  const auto bytes = build_fixture(spec).bytes;
  for (const std::size_t cut : {std::size_t{3}, std::size_t{16}, std::size_t{40}, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    const auto k = error_kind(t);
    EXPECT_TRUE(k == MachOError::Kind::kTruncated || k == MachOError::Kind::kMalformedLoadCommand ||
                k == MachOError::Kind::kMalformedSymtab)
        << cut << " " << to_string(k);
  }
}

TEST(MachOParse, LoadCommandSizeMismatch) {
  auto bytes = build_fixture({}).bytes;
  std::uint32_t sizeofcmds = 0;
  std::memcpy(&sizeofcmds, bytes.data() + 20, 4);
  sizeofcmds += 8;
  std::memcpy(bytes.data() + 20, &sizeofcmds, 4);
  EXPECT_EQ(error_kind(bytes), MachOError::Kind::kMalformedLoadCommand);
}

TEST(MachOSelectors, TwoSelectorsExactly) {
  FixtureSpec spec;
  spec.selectors = {"saveValue:toKeyChainItem:", "openURL:"};
  const auto table = extract_selectors(single(build_fixture(spec).bytes));
  EXPECT_EQ(table.names(), (std::set<std::string>{"saveValue:toKeyChainItem:", "openURL:"}));
  EXPECT_TRUE(table.dangling.empty());
}

TEST(MachOSelectors, NoObjcSectionsMeansEmpty) {
  FixtureSpec spec;
  spec.imports = {"NSHomeDirectory"};
  const auto table = extract_selectors(single(build_fixture(spec).bytes));
  EXPECT_TRUE(table.selectors.empty());
  EXPECT_TRUE(table.dangling.empty());
}

TEST(MachOSelectors, OneDanglingAmongThree) {
  FixtureSpec spec;
  spec.selectors = {"a:", "b:", "c:"};
  spec.dangling_selrefs = 1;
  const Fixture fx = build_fixture(spec);
  const auto table = extract_selectors(single(fx.bytes));
  EXPECT_EQ(table.selectors.size(), 3u);
  ASSERT_EQ(table.dangling.size(), 1u);
  EXPECT_EQ(manifest_of(fx.entries, "dangling").begin()->second, table.dangling[0].pointer);
}

TEST(MachOSelectors, MsgrefsAndSelrefsDeduplicate) {
  FixtureSpec spec;
  spec.selectors = {"openURL:", "alloc"};
  spec.msgref_selectors = {"openURL:", "init"};
  const auto table = extract_selectors(single(build_fixture(spec).bytes));
  EXPECT_EQ(table.names(), (std::set<std::string>{"openURL:", "alloc", "init"}));
}

TEST(MachOSelectors, StringsArePresentAtTheirAddresses) {
  FixtureSpec spec;
  spec.selectors = {"saveValue:toKeyChainItem:", "x", "connectionWithRegisteredName:"};
  spec.msgref_selectors = {"y:z:"};
  const Fixture fx = build_fixture(spec);
  const auto img = single(fx.bytes);
  for (const auto& s : extract_selectors(img).selectors) {
    // vm address -> file offset through the section that contains it
    bool found = false;
    for (const auto& sec : img.sections) {
      if (s.address < sec.vm_addr || s.address >= sec.vm_addr + sec.size) continue;
      const std::size_t off = sec.file_offset + (s.address - sec.vm_addr);
      ASSERT_LE(off + s.name.size() + 1, fx.bytes.size());
      EXPECT_EQ(std::memcmp(fx.bytes.data() + off, s.name.data(), s.name.size()), 0);
      EXPECT_EQ(fx.bytes[off + s.name.size()], 0);
      EXPECT_FALSE(s.name.empty());
      found = true;
    }
    EXPECT_TRUE(found) << s.name;
  }
}

TEST(MachOImports, UnderscoreStripped) {
  FixtureSpec spec;
  spec.imports = {"SecKeychainFindGenericPassword"};
  spec.defined = {"main"};
  const auto syms = extract_imports(single(build_fixture(spec).bytes));
  EXPECT_EQ(syms.imported, (std::set<std::string>{"SecKeychainFindGenericPassword"}));
  EXPECT_EQ(syms.defined, (std::set<std::string>{"main"}));
}

TEST(MachOImports, NoSymtabMeansEmpty) {
  FixtureSpec spec;
  spec.with_symtab = false;
  spec.imports = {"ignored"};
  const auto syms = extract_imports(single(build_fixture(spec).bytes));
  EXPECT_TRUE(syms.imported.empty());
  EXPECT_TRUE(syms.defined.empty());
}

TEST(MachOImports, HundredGeneratedImports) {
  FixtureSpec spec;
  for (int i = 0; i < 100; ++i) spec.imports.push_back("Import" + std::to_string(i * 7919));
  const Fixture fx = build_fixture(spec);
  EXPECT_EQ(extract_imports(single(fx.bytes)).imported, names_of(fx.entries, "import"));
  EXPECT_EQ(names_of(fx.entries, "import").size(), 100u);
}

TEST(MachOImports, BadStringIndexIsMalformedSymtab) {
  FixtureSpec spec;
  spec.imports = {"A", "B"};
  const Fixture fx = build_fixture(spec);
  const auto img = single(fx.bytes);
  auto bytes = fx.bytes;
  const std::uint32_t huge = 0x7fffffff;
  std::memcpy(bytes.data() + img.symtab->symoff, &huge, 4);
  EXPECT_EQ(error_kind(bytes), MachOError::Kind::kMalformedSymtab);
}

// Builder ground truth against the parser, over generated fixtures.
TEST(MachORoundTrip, GeneratedFixturesMatchManifests) {
  Rng rng(20261014);
  for (int f = 0; f < 24; ++f) {
    FixtureSpec spec;
    const int nsel = static_cast<int>(rng() % 12);
    for (int i = 0; i < nsel; ++i) spec.selectors.push_back("sel" + std::to_string(rng() % 30) + ":");
    const int nmsg = static_cast<int>(rng() % 5);
    for (int i = 0; i < nmsg; ++i) spec.msgref_selectors.push_back("msg" + std::to_string(rng() % 10));
    const int nimp = static_cast<int>(rng() % 40);
    for (int i = 0; i < nimp; ++i) spec.imports.push_back("Imp" + std::to_string(i));
    spec.defined = {"start"};
    spec.dangling_selrefs = rng() % 3;
    spec.with_symtab = f % 5 != 4;
    const Fixture fx = build_fixture(spec);
    const auto entries = parse_manifest(fx.manifest());
    EXPECT_EQ(entries, fx.entries);
    const auto img = single(fx.bytes);
    const auto table = extract_selectors(img);
    std::set<std::pair<std::string, std::uint64_t>> got;
    for (const auto& s : table.selectors) got.insert({s.name, s.address});
    EXPECT_EQ(got, manifest_of(entries, "selector")) << f;
    EXPECT_EQ(table.dangling.size(), manifest_of(entries, "dangling").size()) << f;
    const auto syms = extract_imports(img);
    EXPECT_EQ(syms.imported, names_of(entries, "import")) << f;
    EXPECT_EQ(syms.defined, names_of(entries, "defined")) << f;
    for (const auto& e : entries) {
      if (e.kind != "section") continue;
      const auto comma = e.name.find(',');
      const auto* s = img.find_section(e.name.substr(0, comma), e.name.substr(comma + 1));
      ASSERT_NE(s, nullptr) << e.name;
      EXPECT_EQ(s->file_offset, e.address);
    }
  }
}

TEST(MachOFat, IdenticalSlicesGiveIdenticalTables) {
  FixtureSpec spec;
  spec.selectors = {"openURL:", "rootProxyForConnectionWithRegisteredName:"};
  spec.imports = {"SecKeychainFindGenericPassword"};
  const auto thin = build_fixture(spec).bytes;
  const auto images = parse_image(build_fat({thin, thin}));
  ASSERT_EQ(images.size(), 2u);
  const auto a = extract_selectors(images[0]);
  const auto b = extract_selectors(images[1]);
  EXPECT_EQ(a.selectors, b.selectors);
  EXPECT_EQ(a.names(), extract_selectors(single(thin)).names());
  EXPECT_EQ(extract_imports(images[0]), extract_imports(images[1]));
  EXPECT_NE(images[0].slice_offset, images[1].slice_offset);
}

TEST(MachOFat, TruncatedFatHeader) {
  auto fat = build_fat({build_fixture({}).bytes});
  fat.resize(12);
  EXPECT_EQ(error_kind(fat), MachOError::Kind::kTruncated);
}

TEST(QuickScan, KeychainImport) {
  FixtureSpec spec;
  spec.imports = {"SecKeychainFindGenericPassword"};
  const auto usage = quick_scan(single(build_fixture(spec).bytes), rules::builtin_rules());
  EXPECT_TRUE(usage.channels.at(rules::ChannelId::kKeychain).present);
  EXPECT_EQ(usage.channels.at(rules::ChannelId::kKeychain).matched_names,
            std::vector<std::string>{"SecKeychainFindGenericPassword"});
}

TEST(QuickScan, NothingMatches) {
  FixtureSpec spec;
  spec.imports = {"malloc", "free"};
  const auto usage = quick_scan(single(build_fixture(spec).bytes), rules::builtin_rules());
  EXPECT_FALSE(usage.any_present());
  EXPECT_EQ(usage.channels.size(), 6u);
}

TEST(QuickScan, NsConnectionSelectorOnly) {
  FixtureSpec spec;
  spec.selectors = {"rootProxyForConnectionWithRegisteredName:"};
  const auto usage = quick_scan(single(build_fixture(spec).bytes), rules::builtin_rules());
  for (const auto& [id, p] : usage.channels)
    EXPECT_EQ(p.present, id == rules::ChannelId::kNsConnectionClient) << rules::to_string(id);
}

TEST(QuickScan, MatchedNamesComeFromTheImage) {
  FixtureSpec spec;
  spec.selectors = {"openURL:options:completionHandler:", "serviceConnectionWithName:"};
  spec.imports = {"NSHomeDirectory", "SecACLCopyContents"};
  const auto img = single(build_fixture(spec).bytes);
  const auto sels = extract_selectors(img).names();
  const auto syms = extract_imports(img);
  const auto usage = quick_scan(img, rules::builtin_rules());
  for (const auto& [id, p] : usage.channels) {
    for (const auto& n : p.matched_names)
      EXPECT_TRUE(sels.count(n) || syms.imported.count(n)) << n;
  }
  EXPECT_TRUE(usage.channels.at(rules::ChannelId::kScheme).present);
  EXPECT_TRUE(usage.channels.at(rules::ChannelId::kBid).present);
  EXPECT_TRUE(usage.channels.at(rules::ChannelId::kNsConnectionServer).present);
}

TEST(QuickScan, AddingASelectorNeverRemovesAChannel) {
  Rng rng(7);
  const auto rs = rules::builtin_rules();
  const std::vector<std::string> pool{"openURL:", "connectionWithRegisteredName:", "alloc",
                                      "serviceConnectionWithName:", "init", "<websocket-response>",
                                      "decidePolicyForMIMEType:request:frame:decisionListener:"};
  for (int round = 0; round < 40; ++round) {
    FixtureSpec spec;
    for (int i = 0; i < 3; ++i) spec.selectors.push_back(pool[rng() % pool.size()]);
    const auto before = quick_scan(single(build_fixture(spec).bytes), rs);
    spec.selectors.push_back(pool[rng() % pool.size()]);
    const auto after = quick_scan(single(build_fixture(spec).bytes), rs);
    for (const auto& [id, p] : before.channels) {
      if (p.present) {
        EXPECT_TRUE(after.channels.at(id).present);
      }
    }
  }
}

TEST(MachOFuzz, MutationsOnlyRaiseStructuredErrors) {
  FixtureSpec spec;
  spec.selectors = {"saveValue:toKeyChainItem:", "openURL:", "alloc"};
  spec.msgref_selectors = {"init"};
  spec.imports = {"SecKeychainFindGenericPassword", "NSHomeDirectory"};
  spec.defined = {"main"};
  spec.dangling_selrefs = 1;
  const auto thin = build_fixture(spec).bytes;
  const auto fat = build_fat({thin, thin});
  Rng rng(0x5eed);
  int ok = 0, errors = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    auto bytes = (iter % 4 == 0) ? fat : thin;
    const int edits = 1 + static_cast<int>(rng() % 8);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = rng() % bytes.size();
      switch (rng() % 5) {
        case 0: bytes[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
        case 1: bytes[at] = static_cast<std::uint8_t>(rng()); break;
        case 2: bytes.resize(std::max<std::size_t>(1, at)); break;
        case 3:
          if (at + 4 <= bytes.size()) {
            const std::uint32_t v = (rng() % 2) ? 0xffffffffu : static_cast<std::uint32_t>(rng() % 4096);
            std::memcpy(bytes.data() + at, &v, 4);
          }
          break;
        default: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(rng()));
      }
    }
    try {
      for (const auto& img : parse_image(bytes)) {
        extract_selectors(img);
        extract_imports(img);
        quick_scan(img, rules::builtin_rules());
      }
      ++ok;
    } catch (const MachOError&) {
      ++errors;
    }
  }
  EXPECT_EQ(ok + errors, 2000);
  EXPECT_GT(errors, 0);
}

}  // namespace
}  // namespace xara::macho
