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

#include <filesystem>
#include <fstream>

#include "nlohmann/json.hpp"
#include "test_support.hpp"
#include "xara/cli.hpp"
#include "xara/macho_builder.hpp"
#include "xara/rules.hpp"

namespace xara::cli {
namespace {

namespace fs = std::filesystem;
using testing::CliResult;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("xara-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return p.string();
  }
  std::string write(const std::string& name, const std::string& text) {
    return write(name, std::vector<std::uint8_t>(text.begin(), text.end()));
  }

  // Every invocation runs twice; the outputs must agree byte for byte.
  CliResult run(const std::vector<std::string>& args) {
    const CliResult a = testing::run_cli(args);
    const CliResult b = testing::run_cli(args);
    EXPECT_EQ(a, b) << args.front();
    return a;
  }

  static std::string corpus(const std::string& name) { return testing::fixture_path("corpus/" + name + ".naif"); }
  static std::string scenario(const std::string& name) {
    return testing::fixture_path("scenarios/" + name + ".scn");
  }

  fs::path dir_;
};

TEST_F(CliTest, QuickscanExitCodes) {
  macho::FixtureSpec kc;
  kc.imports = {"SecKeychainFindGenericPassword"};
  const auto kc_path = write("kc.bin", macho::build_fixture(kc).bytes);
  const auto plain_path = write("plain.bin", macho::build_fixture({}).bytes);
  const CliResult found = run({"quickscan", kc_path});
  EXPECT_EQ(found.code, kExitFindings);
  EXPECT_NE(found.out.find("keychain present SecKeychainFindGenericPassword"), std::string::npos);
  EXPECT_EQ(run({"quickscan", plain_path}).code, kExitClean);
}

TEST_F(CliTest, QuickscanBatchWithOneMalformedFile) {
  macho::FixtureSpec kc;
  kc.imports = {"SecKeychainFindGenericPassword"};
  const auto a = write("a.bin", macho::build_fixture(kc).bytes);
  const auto b = write("b.bin", std::string("not a binary"));
  const auto c = write("c.bin", macho::build_fixture({}).bytes);
  const CliResult r = run({"quickscan", "--format", "json", a, b, c});
  EXPECT_EQ(r.code, kExitError);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.at("files").size(), 2u);
  ASSERT_EQ(j.at("errors").size(), 1u);
  EXPECT_EQ(j["errors"][0]["path"], b);
  EXPECT_EQ(j["files"][0]["path"], a);
  EXPECT_EQ(j["files"][1]["path"], c);
  EXPECT_TRUE(j["files"][0]["channels"]["keychain"]["present"].get<bool>());
  EXPECT_EQ(run({"quickscan", write("missing-dir-marker", std::string()) + ".nope"}).code, kExitError);
}

TEST_F(CliTest, AnalyzeExitCodes) {
  EXPECT_EQ(run({"analyze", corpus("keychain_evernote_save")}).code, kExitFindings);
  EXPECT_EQ(run({"analyze", corpus("keychain_acl_checked")}).code, kExitClean);
  EXPECT_EQ(run({"analyze", corpus("bid_home_directory")}).code, kExitClean);
  EXPECT_EQ(run({"analyze", "--platform", "osx", corpus("scheme_handler_checked")}).code, kExitClean);
  EXPECT_EQ(run({"analyze", "--platform", "ios", corpus("scheme_handler_checked")}).code, kExitFindings);
  const auto bad = write("bad.naif", std::string("# naif-version: 1\n.proc \"x\"\n0: frob\n.endproc\n"));
  const CliResult r = run({"analyze", corpus("keychain_evernote_save"), bad});
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.out.find("error " + bad), std::string::npos);
  EXPECT_NE(r.out.find("finding keychain vulnerable"), std::string::npos);
  EXPECT_EQ(run({"analyze", "--platform", "windows", corpus("no_channels")}).code, kExitError);
}

TEST_F(CliTest, AnalyzeJsonSchema) {
  const CliResult r = run({"analyze", "--format", "json", corpus("keychain_evernote_save"), corpus("mixed_app")});
  ASSERT_EQ(r.code, kExitFindings);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.at("reports").size(), 2u);
  EXPECT_TRUE(j.at("errors").empty());
  for (const auto& rep : j["reports"]) {
    for (const char* k : {"source", "platform", "ruleset_version", "findings", "summary"})
      EXPECT_TRUE(rep.contains(k)) << k;
    EXPECT_EQ(rep["summary"].size(), 6u);
    for (const auto& [ch, counts] : rep["summary"].items())
      for (const char* k : {"vulnerable", "safe", "informational", "not_applicable"})
        EXPECT_TRUE(counts.at(k).is_number_unsigned()) << ch << k;
    for (const auto& f : rep["findings"]) {
      for (const char* k : {"channel", "verdict", "auth_status", "claim", "uses", "evidence", "notes"})
        EXPECT_TRUE(f.contains(k)) << k;
      for (const char* k : {"proc", "index", "location"}) EXPECT_TRUE(f["claim"].contains(k)) << k;
    }
  }
  const auto& f = j["reports"][0]["findings"][0];
  EXPECT_EQ(f["channel"], "keychain");
  EXPECT_EQ(f["verdict"], "vulnerable");
  EXPECT_EQ(f["auth_status"], "missing");
  EXPECT_EQ(f["claim"]["index"], 3);
  EXPECT_EQ(f["claim"]["location"], "sp[-48]");
}

TEST_F(CliTest, DumpCfg) {
  const CliResult r = run({"analyze", "--dump-cfg", corpus("keychain_evernote_save")});
  EXPECT_NE(r.out.find("digraph"), std::string::npos);
}

TEST_F(CliTest, CustomRulesFile) {
  const auto rules = write("only-bid.rules", std::string("# xara-rules: 1\nchannel bid\n"
                                                         "  claim c-symbol \"NSHomeDirectory\" ref=return-value\n"));
  EXPECT_EQ(run({"analyze", "--rules", rules, corpus("keychain_evernote_save")}).code, kExitClean);
  const auto broken = write("broken.rules", std::string("# xara-rules: 1\nchannel nope\n"));
  EXPECT_EQ(run({"analyze", "--rules", broken, corpus("keychain_evernote_save")}).code, kExitError);
}

TEST_F(CliTest, RulesCheck) {
  const auto good = write("builtin.rules", rules::save_rules(rules::builtin_rules()));
  EXPECT_EQ(run({"rules", "check", good}).code, kExitClean);
  const auto bad_binding =
      write("binding.rules", std::string("# xara-rules: 1\nchannel keychain\n  claim c-symbol \"F\" ref=receiver\n"));
  const CliResult b = run({"rules", "check", bad_binding});
  EXPECT_EQ(b.code, kExitError);
  EXPECT_NE(b.err.find("BadBinding"), std::string::npos);
  const auto unknown = write("unknown.rules", std::string("# xara-rules: 1\nchannel keychain\n"
                                                          "  claim c-symbol \"F\" ref=arg(0)\n  flavour sweet\n"));
  const CliResult u = run({"rules", "check", unknown});
  EXPECT_EQ(u.code, kExitError);
  EXPECT_NE(u.err.find(unknown + ":4:"), std::string::npos);
  EXPECT_EQ(run({"rules", "dump"}).out, rules::save_rules(rules::builtin_rules()));
}

TEST_F(CliTest, SimExitCodes) {
  const std::string profiles = testing::fixture_path("profiles/chrome.profiles");
  for (const char* attack : {"keychain_preempt", "keychain_delete_recreate", "bid_container",
                             "nsconnection_impersonation", "scheme_hijack_osx", "scheme_hijack_ios"}) {
    EXPECT_EQ(run({"sim", "run", "--monitor", "--profiles", profiles, scenario(attack)}).code, kExitAlarms) << attack;
    EXPECT_EQ(run({"sim", "run", scenario(attack)}).code, kExitClean) << attack;
  }
  EXPECT_EQ(run({"sim", "run", "--monitor", scenario("port_websocket")}).code, kExitClean);
  EXPECT_EQ(run({"sim", "run", "--monitor", scenario("benign_50")}).code, kExitClean);
  const CliResult kc = run({"sim", "run", "--monitor", scenario("keychain_preempt")});
  EXPECT_NE(kc.out.find("KeychainAclAnomaly"), std::string::npos);
  const auto broken = write("broken.scn", std::string("install ghost\nteleport ghost\n"));
  EXPECT_EQ(run({"sim", "run", broken}).code, kExitError);
}

TEST_F(CliTest, SimPlatformChangesRouting) {
  const CliResult osx = run({"sim", "run", "--platform", "osx", "--format", "json", scenario("scheme_hijack_ios")});
  const CliResult ios = run({"sim", "run", "--platform", "ios", "--format", "json", scenario("scheme_hijack_ios")});
  ASSERT_EQ(osx.code, kExitClean);
  EXPECT_NE(osx.out, ios.out);
  EXPECT_NE(osx.out.find("routed to facebook"), std::string::npos);
  EXPECT_NE(ios.out.find("routed to attacker"), std::string::npos);
}

TEST_F(CliTest, OutWritesOnlyThere) {
  const fs::path cwd = fs::current_path();
  const fs::path work = dir_ / "work";
  fs::create_directories(work);
  fs::current_path(work);
  const std::string target = (dir_ / "report.json").string();
  const CliResult r = run({"analyze", "--format", "json", "--out", target, corpus("keychain_evernote_save")});
  const CliResult s =
      run({"sim", "run", "--monitor", "--out", (dir_ / "trace.txt").string(), scenario("bid_container")});
  fs::current_path(cwd);
  EXPECT_EQ(r.code, kExitFindings);
  EXPECT_EQ(s.code, kExitAlarms);
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::is_empty(work));
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir_)) names.insert(e.path().filename().string());
  EXPECT_EQ(names, (std::set<std::string>{"report.json", "trace.txt", "work"}));
  const auto j = nlohmann::json::parse(testing::read_text(target));
  EXPECT_EQ(j["reports"].size(), 1u);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitError);
  EXPECT_EQ(run({"frobnicate"}).code, kExitError);
  EXPECT_EQ(run({"analyze", "--format", "xml", corpus("no_channels")}).code, kExitError);
  EXPECT_EQ(run({"--help"}).code, kExitClean);
}

}  // namespace
}  // namespace xara::cli
