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

#include "test_support.hpp"
#include "xara/dataflow.hpp"

namespace xara::dataflow {
namespace {

using ir::Location;

cfg::Cfg graph(const std::string& body) {
  return cfg::build_cfg(
      ir::parse_listing("# naif-version: 1\n.proc \"p\"\n" + body + ".endproc\n").procedures.at(0));
}

std::set<std::size_t> use_calls(const DefUseChain& c) {
  std::set<std::size_t> out;
  for (const auto& u : c.uses) out.insert(u.call_index);
  return out;
}

const std::string kFig4 =
    "0: imm r1, 0\n1: arg 0, r1\n2: argaddr 7, sp[-48]\n3: call \"SecKeychainFindGenericPassword\"\n"
    "4: mov r3, rv\n5: br 11\n6: mov r4, sp[-48]\n7: arg 0, r4\n8: arg 3, r2\n"
    "9: call \"SecKeychainItemModifyAttributesAndData\"\n10: jmp 12\n11: call \"SecKeychainAddGenericPassword\"\n"
    "12: ret\n";

TEST(ComputeChain, ClaimReachesModify) {
  const auto g = graph(kFig4);
  const auto c = compute_chain(g, {"p", 3, Location::stack(-48)});
  ASSERT_EQ(c.uses.size(), 1u);
  EXPECT_EQ(c.uses[0].call_index, 9u);
  EXPECT_EQ(c.uses[0].arg_index, 7u);
  EXPECT_EQ(c.uses[0].via, Location::reg(4));
  EXPECT_EQ(c.uses[0].tag, Tag::kReference);
  EXPECT_TRUE(c.kills.empty());
  EXPECT_TRUE(c.carriers[4].count({Location::stack(-48), Tag::kReference}));
}

TEST(ComputeChain, RedefinitionKills) {
  const auto g = graph("0: argaddr 7, sp[-48]\n1: call \"SecKeychainFindGenericPassword\"\n"
                       "2: imm sp[-48], 0\n3: arg 0, sp[-48]\n"
                       "4: call \"SecKeychainItemModifyAttributesAndData\"\n5: ret\n");
  const auto c = compute_chain(g, {"p", 1, Location::stack(-48)});
  EXPECT_TRUE(c.uses.empty());
  EXPECT_EQ(c.kills, std::vector<std::size_t>{2});
}

TEST(ComputeChain, MayAnalysisAcrossDiamond) {
  // r1 -> r2 on both arms, one arm then kills r2; the use at the join stays.
  const auto g = graph("0: call \"claim\"\n1: mov r1, rv\n2: mov r2, r1\n3: br 5\n4: imm r2, 0\n"
                       "5: arg 0, r2\n6: call \"use\"\n7: ret\n");
  const auto c = compute_chain(g, {"p", 0, Location::rv()});
  EXPECT_EQ(use_calls(c), (std::set<std::size_t>{6}));
  // The use call itself clobbers rv, which still held the reference.
  EXPECT_EQ(c.kills, (std::vector<std::size_t>{4, 6}));
}

TEST(ComputeChain, ArgBindingIsClearedAtBlockEntry) {
  const auto g = graph("0: call \"claim\"\n1: arg 0, rv\n2: br 3\n3: call \"use\"\n4: ret\n");
  EXPECT_TRUE(compute_chain(g, {"p", 0, Location::rv()}).uses.empty());
}

TEST(ComputeChain, UnreachableDefinition) {
  const auto g = graph("0: ret\n1: call \"claim\"\n2: ret\n");
  try {
    compute_chain(g, {"p", 1, Location::rv()});
    FAIL();
  } catch (const DataflowError& e) {
    EXPECT_EQ(e.kind(), DataflowError::Kind::kUnreachableDef);
  }
}

TEST(ComputeChain, DerivationProducesDerivedCarrier) {
  const auto g = graph("0: argaddr 7, sp[-48]\n1: call \"find\"\n2: arg 0, sp[-48]\n3: argaddr 1, sp[-56]\n"
                       "4: call \"copyAccess\"\n5: arg 0, sp[-56]\n6: call \"aclContents\"\n7: ret\n");
  ChainOptions opts;
  opts.derivations[4] = {0, Derivation::Output::kOutParam, 1};
  const auto c = compute_chain(g, {"p", 1, Location::stack(-48)}, opts);
  EXPECT_EQ(c.tags_at(6, 0), (std::set<Tag>{Tag::kDerived}));
  EXPECT_EQ(c.tags_at(4, 0), (std::set<Tag>{Tag::kReference}));
  EXPECT_TRUE(compute_chain(g, {"p", 1, Location::stack(-48)}).tags_at(6, 0).empty());
}

TEST(ComputeChain, ParameterDefinitionAtEntry) {
  const auto g = graph("0: mov r5, r2\n1: arg 0, r5\n2: call \"use\"\n3: ret\n");
  const auto c = compute_chain(g, {"p", std::nullopt, Location::reg(2)});
  EXPECT_EQ(use_calls(c), (std::set<std::size_t>{2}));
}

TEST(ComputeChain, LoopTerminatesWithBoundedIterations) {
  const auto g = graph("0: call \"claim\"\n1: mov r1, rv\n2: mov r2, r1\n3: mov r3, r2\n4: mov r1, r3\n"
                       "5: br 2\n6: arg 0, r3\n7: call \"use\"\n8: ret\n");
  const auto c = compute_chain(g, {"p", 0, Location::rv()});
  EXPECT_EQ(use_calls(c), (std::set<std::size_t>{7}));
  EXPECT_LE(c.iterations, g.blocks.size() * 17 * 2 + 1);
}

// Use sets and per-point carriers equal the union over every explicit path.
TEST(ComputeChain, RandomAcyclicProceduresMatchPathOracle) {
  testing::Rng rng(12);
  int checked = 0;
  while (checked < 1000) {
    const ir::Procedure p = testing::random_acyclic_procedure(rng, 12);
    const auto g = cfg::build_cfg(p);
    const auto reachable = cfg::reachable_blocks(g);
    std::vector<std::size_t> calls;
    for (std::size_t i = 0; i < p.instructions.size(); ++i)
      if (std::holds_alternative<ir::Call>(p.instructions[i]) && reachable.count(g.block_of(i)))
        calls.push_back(i);
    if (calls.empty()) continue;
    const std::size_t def = calls[rng() % calls.size()];
    const Location loc = (rng() % 2) ? Location::rv() : Location::stack(-8);
    std::map<std::size_t, Derivation> derivations;
    for (const auto c : calls) {
      if (c != def && rng() % 4 == 0)
        derivations[c] = {static_cast<int>(rng() % 3),
                          (rng() % 2) ? Derivation::Output::kReturnValue : Derivation::Output::kOutParam,
                          static_cast<int>(rng() % 3)};
    }
    ChainOptions opts;
    opts.derivations = derivations;
    const auto chain = compute_chain(g, {"p", def, loc}, opts);
    const auto oracle = testing::oracle_chain(p, def, loc, derivations);
    const std::set<Use> got(chain.uses.begin(), chain.uses.end());
    ASSERT_EQ(got, oracle.uses) << ir::print_procedure(p) << "def " << def;
    for (std::size_t i = 0; i < p.instructions.size(); ++i)
      ASSERT_EQ(chain.carriers[i], oracle.carriers[i]) << ir::print_procedure(p) << "at " << i;
    ++checked;
  }
}

TEST(AuthAllPaths, StraightLine) {
  const auto g = graph("0: call \"claim\"\n1: call \"auth\"\n2: call \"use\"\n3: ret\n");
  EXPECT_TRUE(auth_on_all_paths(g, {"p", 0, Location::rv()}, 2, {1}));
  EXPECT_FALSE(auth_on_all_paths(g, {"p", 0, Location::rv()}, 2, {}));
}

TEST(AuthAllPaths, OneArmOfDiamond) {
  const auto g = graph("0: call \"claim\"\n1: br 4\n2: call \"auth\"\n3: jmp 5\n4: imm r0, 0\n"
                       "5: call \"use\"\n6: ret\n");
  const RefSite def{"p", 0, Location::rv()};
  EXPECT_FALSE(auth_on_all_paths(g, def, 5, {2}));
  EXPECT_TRUE(auth_on_some_path(g, def, 5, {2}));
}

TEST(AuthAllPaths, DominatingAuthInsideLoop) {
  // Loop body 1..3 always runs the auth at 1 before the exit to the use.
  const auto g = graph("0: call \"claim\"\n1: call \"auth\"\n2: imm r0, 1\n3: br 1\n4: call \"use\"\n5: ret\n");
  EXPECT_TRUE(auth_on_all_paths(g, {"p", 0, Location::rv()}, 4, {1}));
}

TEST(AuthAllPaths, AuthInLoopBodySkippedByWhileTest) {
  const auto g = graph("0: call \"claim\"\n1: br 4\n2: call \"auth\"\n3: jmp 1\n4: call \"use\"\n5: ret\n");
  EXPECT_FALSE(auth_on_all_paths(g, {"p", 0, Location::rv()}, 4, {2}));
  EXPECT_TRUE(auth_on_some_path(g, {"p", 0, Location::rv()}, 4, {2}));
}

TEST(AuthAllPaths, RandomDiamondsAndLoopsMatchPathOracle) {
  testing::Rng rng(500);
  int trues = 0;
  for (int round = 0; round < 500; ++round) {
    const auto c = testing::random_auth_case(rng);
    const auto g = cfg::build_cfg(c.proc);
    const bool got = auth_on_all_paths(g, {"q", c.def_index, Location::rv()}, c.use_index, c.auth_sites);
    const bool want = testing::oracle_auth_all_paths(c.proc, c.def_index, c.use_index, c.auth_sites);
    ASSERT_EQ(got, want) << ir::print_procedure(c.proc) << "use " << c.use_index;
    trues += got;
  }
  EXPECT_GT(trues, 25);
  EXPECT_LT(trues, 475);
}

}  // namespace
}  // namespace xara::dataflow
