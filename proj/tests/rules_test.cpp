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

#include <algorithm>

#include "xara/rules.hpp"

namespace xara::rules {
namespace {

std::vector<std::string> names(const std::vector<ApiSig>& sigs) {
  std::vector<std::string> out;
  for (const auto& s : sigs) out.push_back(s.name);
  return out;
}

RuleError load_error(const std::string& text) {
  try {
    load_rules(text, "t.rules");
  } catch (const RuleError& e) {
    return e;
  }
  ADD_FAILURE() << "loaded:\n" << text;
  return RuleError(RuleError::Kind::kSchema, "", -1, "");
}

const char* kHead = "# xara-rules: 1\n";

TEST(BuiltinRules, Keychain) {
  const auto rs = builtin_rules();
  const auto* kc = rs.find(ChannelId::kKeychain);
  ASSERT_NE(kc, nullptr);
  EXPECT_EQ(names(kc->claims),
            (std::vector<std::string>{"SecKeychainFindGenericPassword", "SecKeychainFindInternetPassword"}));
  for (const auto& c : kc->claims) EXPECT_EQ(c.ref, Binding::outparam());
  EXPECT_EQ(names(kc->uses), (std::vector<std::string>{"SecKeychainItemModifyAttributesAndData",
                                                       "SecKeychainItemModifyContent"}));
  for (const auto& u : kc->uses) EXPECT_EQ(u.ref, Binding::arg(0));
  EXPECT_EQ(names(kc->derives), std::vector<std::string>{"SecKeychainItemCopyAccess"});
  EXPECT_EQ(names(kc->auths), std::vector<std::string>{"SecACLCopyContents"});
  EXPECT_EQ(kc->auths[0].carrier, CarrierReq::kDerived);
}

TEST(BuiltinRules, NsConnection) {
  const auto rs = builtin_rules();
  const auto* client = rs.find(ChannelId::kNsConnectionClient);
  EXPECT_EQ(names(client->claims), (std::vector<std::string>{"rootProxyForConnectionWithRegisteredName:",
                                                             "connectionWithRegisteredName:"}));
  EXPECT_TRUE(client->auths.empty());
  EXPECT_FALSE(client->auth_available(Platform::kOsx));
  EXPECT_FALSE(client->auth_available(Platform::kIos));
  EXPECT_EQ(client->no_auth_verdict, Verdict::kVulnerable);
  const auto* server = rs.find(ChannelId::kNsConnectionServer);
  EXPECT_EQ(names(server->claims), std::vector<std::string>{"serviceConnectionWithName:"});
  EXPECT_EQ(server->claim_verdict, Verdict::kInformational);
}

TEST(BuiltinRules, WebSocketNeedsOriginAndSignature) {
  const auto* ws = builtin_rules().find(ChannelId::kWebSocketServer);
  EXPECT_EQ(ws->auth_mode, AuthMode::kAll);
  ASSERT_EQ(ws->auths.size(), 2u);
  EXPECT_EQ(ws->auths[0].literal, "Origin");
  EXPECT_EQ(ws->auths[1].name, "SecCodeCheckValidity");
}

TEST(BuiltinRules, Scheme) {
  const auto* sc = builtin_rules().find(ChannelId::kScheme);
  EXPECT_TRUE(sc->auth_available(Platform::kOsx));
  EXPECT_FALSE(sc->auth_available(Platform::kIos));
  EXPECT_EQ(sc->reserved_names,
            (std::vector<std::string>{"mailto", "tel", "facetime", "sms", "http", "https"}));
  EXPECT_EQ(names(sc->uses), (std::vector<std::string>{"openURL:", "openURLs:withAppBundleID:"}));
  EXPECT_EQ(names(sc->auths),
            (std::vector<std::string>{"URLForApplicationToOpenURL:", "LSCopyDefaultHandlerForURLScheme"}));
  std::size_t policy = 0;
  for (const auto& c : sc->claims) {
    if (c.kind == ApiKind::kUrlLiteral) {
      EXPECT_EQ(c.ref, Binding::dest());
    }
    if (c.kind == ApiKind::kObjcSelector) ++policy;
  }
  EXPECT_EQ(policy, 4u);
}

TEST(BuiltinRules, Bid) {
  const auto* bid = builtin_rules().find(ChannelId::kBid);
  EXPECT_EQ(names(bid->claims), std::vector<std::string>{"NSHomeDirectory"});
  EXPECT_EQ(bid->claim_verdict, Verdict::kInformational);
}

// Every fingerprint name sits in exactly one field of exactly one rule.
TEST(BuiltinRules, EachNameAppearsOnce) {
  const std::vector<std::string> expected{
      "SecKeychainFindGenericPassword", "SecKeychainFindInternetPassword",
      "SecKeychainItemModifyAttributesAndData", "SecKeychainItemModifyContent",
      "SecKeychainItemCopyAccess", "SecACLCopyContents",
      "rootProxyForConnectionWithRegisteredName:", "connectionWithRegisteredName:",
      "serviceConnectionWithName:", "SecCodeCheckValidity",
      "decidePolicyForMIMEType:request:", "decidePolicyForNavigationAction:request:",
      "decidePolicyForNewWindowAction:request:", "willPerformClientRedirectToURL:",
      "openURL:", "openURLs:withAppBundleID:", "URLForApplicationToOpenURL:",
      "LSCopyDefaultHandlerForURLScheme", "NSHomeDirectory"};
  std::map<std::string, int> seen;
  for (const auto& [id, r] : builtin_rules().rules) {
    for (const auto* field : {&r.claims, &r.uses, &r.auths, &r.derives})
      for (const auto& s : *field) ++seen[s.name];
  }
  for (const auto& n : expected) EXPECT_EQ(seen[n], 1) << n;
  EXPECT_EQ(builtin_rules().rules.size(), 6u);
}

TEST(LoadRules, BuiltinRoundTrip) {
  const auto rs = builtin_rules();
  const std::string text = save_rules(rs);
  const auto back = load_rules(text);
  EXPECT_EQ(back, rs);
  EXPECT_EQ(save_rules(back), text);
  EXPECT_NO_THROW(validate(rs));
}

TEST(LoadRules, EmptyFile) {
  EXPECT_TRUE(load_rules("").rules.empty());
  EXPECT_TRUE(load_rules(kHead).rules.empty());
}

TEST(LoadRules, MinimalChannel) {
  const auto rs = load_rules(std::string(kHead) +
                             "channel keychain  # comment\n"
                             "  claim c-symbol \"Find\" ref=outparam(2)\n"
                             "  use c-symbol \"Modify\" ref=arg(0)\n"
                             "  platform ios auth=no\n");
  const auto* kc = rs.find(ChannelId::kKeychain);
  ASSERT_NE(kc, nullptr);
  EXPECT_EQ(kc->claims[0].ref, Binding::outparam(2));
  EXPECT_FALSE(kc->auth_available(Platform::kIos));
  EXPECT_TRUE(kc->auth_available(Platform::kOsx));
}

TEST(LoadRules, ReceiverOnCSymbolIsBadBinding) {
  const auto e = load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=receiver\n");
  EXPECT_EQ(e.kind(), RuleError::Kind::kBadBinding);
  EXPECT_EQ(e.line(), 3);
}

TEST(LoadRules, UnknownKeyHasLineNumber) {
  const auto e = load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=arg(0)\n"
                            "  colour blue\n");
  EXPECT_EQ(e.kind(), RuleError::Kind::kSchema);
  EXPECT_EQ(e.line(), 4);
  EXPECT_NE(std::string(e.what()).find("t.rules:4"), std::string::npos);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=arg(0) colour=1\n")
                .line(),
            3);
}

TEST(LoadRules, OtherErrors) {
  EXPECT_EQ(load_error(std::string(kHead) + "channel bid\nchannel bid\n").kind(),
            RuleError::Kind::kDuplicateChannel);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n").kind(), RuleError::Kind::kSchema);
  EXPECT_EQ(load_error(std::string(kHead) + "channel wormhole\n").kind(), RuleError::Kind::kSchema);
  EXPECT_EQ(load_error("channel bid\n").kind(), RuleError::Kind::kSchema);
  EXPECT_EQ(load_error(std::string(kHead) + "  claim c-symbol \"F\" ref=arg(0)\n").kind(),
            RuleError::Kind::kSchema);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=arg(x)\n").kind(),
            RuleError::Kind::kBadBinding);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"\" ref=arg(0)\n").kind(),
            RuleError::Kind::kSchema);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"*\" ref=arg(0)\n").kind(),
            RuleError::Kind::kSchema);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=any\n").kind(),
            RuleError::Kind::kBadBinding);
  EXPECT_EQ(load_error(std::string(kHead) + "channel keychain\n  claim c-symbol \"F\" ref=arg(0)\n"
                                            "  use c-symbol \"U\" ref=return-value\n")
                .kind(),
            RuleError::Kind::kBadBinding);
}

TEST(LoadRules, SaveIsIdempotentOnHandWrittenInput) {
  const std::string text = std::string(kHead) +
                           "channel scheme\n"
                           "  reserved \"mailto\"\n"
                           "  use objc-selector \"openURL:\" ref=arg(0)\n"
                           "  claim url-literal \"*\" ref=dest\n";
  const std::string once = save_rules(load_rules(text));
  EXPECT_EQ(save_rules(load_rules(once)), once);
}

TEST(SelectorMatches, KeywordPrefix) {
  EXPECT_TRUE(selector_matches("openURL:", "openURL:"));
  EXPECT_TRUE(selector_matches("openURL:", "openURL:options:completionHandler:"));
  EXPECT_FALSE(selector_matches("openURL:", "openURLs:withAppBundleID:"));
  EXPECT_FALSE(selector_matches("init", "initWithFrame:"));
  EXPECT_TRUE(selector_matches("init", "init"));
  EXPECT_TRUE(selector_matches("decidePolicyForMIMEType:request:",
                               "decidePolicyForMIMEType:request:frame:decisionListener:"));
}

TEST(UrlScheme, LiteralForms) {
  EXPECT_EQ(url_scheme("wunderlist://oauth/google?token=ya29XXX"), "wunderlist");
  EXPECT_EQ(url_scheme("FB274266067164://x"), "fb274266067164");
  EXPECT_FALSE(url_scheme("not a url"));
  EXPECT_FALSE(url_scheme("mailto:a@b.c"));
  EXPECT_EQ(url_scheme("mailto:a@b.c", {"mailto"}), "mailto");
  EXPECT_FALSE(url_scheme("://x"));
  EXPECT_FALSE(url_scheme("1abc://x"));
}

TEST(ObjcDispatch, Variants) {
  EXPECT_TRUE(is_objc_dispatch("objc_msgSend"));
  EXPECT_TRUE(is_objc_dispatch("objc_msgSendSuper2"));
  EXPECT_FALSE(is_objc_dispatch("objc_retain"));
}

TEST(Bindings, TextForms) {
  for (const auto& b : {Binding::return_value(), Binding::outparam(), Binding::outparam(3), Binding::arg(1),
                        Binding::receiver(), Binding::any(), Binding::none(), Binding::dest()}) {
    EXPECT_EQ(parse_binding(to_string(b)), b) << to_string(b);
  }
}

}  // namespace
}  // namespace xara::rules
