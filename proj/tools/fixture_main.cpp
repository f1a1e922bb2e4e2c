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

// Writes a synthetic Mach-O file and its sidecar manifest.
//
//   xara-fixture out.bin --import SecKeychainFindGenericPassword \
//       --selector openURL: --dangling 1

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xara/macho_builder.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic Mach-O fixture writer", "xara-fixture"};
  std::string out;
  std::string manifest_path;
  xara::macho::FixtureSpec spec;
  bool encrypted = false;
  int fat_slices = 0;
  app.add_option("output", out, "Binary to write")->required();
  app.add_option("--manifest", manifest_path, "Manifest path (default: <output>.manifest)");
  app.add_option("--selector", spec.selectors, "Selector referenced from __objc_selrefs");
  app.add_option("--msgref", spec.msgref_selectors, "Selector referenced from __objc_msgrefs");
  app.add_option("--import", spec.imports, "Undefined external symbol (no underscore)");
  app.add_option("--defined", spec.defined, "Defined external symbol");
  app.add_option("--dangling", spec.dangling_selrefs, "Selector references left unresolvable");
  app.add_flag("--encrypted", encrypted, "Mark the image as encrypted");
  app.add_option("--fat", fat_slices, "Wrap N copies into a fat archive")
      ->check(CLI::Range(0, 8));
  CLI11_PARSE(app, argc, argv);

  if (encrypted) spec.cryptid = 1;
  const auto fixture = xara::macho::build_fixture(spec);
  std::vector<std::uint8_t> bytes = fixture.bytes;
  if (fat_slices > 0)
    bytes = xara::macho::build_fat(std::vector<std::vector<std::uint8_t>>(fat_slices, bytes));

  std::ofstream bin(out, std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!bin) {
    std::cerr << "xara-fixture: cannot write " << out << '\n';
    return 1;
  }
  if (manifest_path.empty()) manifest_path = out + ".manifest";
  std::ofstream man(manifest_path, std::ios::trunc);
  man << fixture.manifest();
  if (!man) {
    std::cerr << "xara-fixture: cannot write " << manifest_path << '\n';
    return 1;
  }
  return 0;
}
