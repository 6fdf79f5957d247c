// tests/test_trial.cpp
//
// Copyright 2022  sasvkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sasv/trial.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <sstream>

#include "sasv/random.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

std::vector<Trial> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_protocol(in);
}

std::string serialize(std::span<const Trial> trials) {
  std::ostringstream out;
  write_protocol(out, trials);
  return out.str();
}

}  // namespace

TEST_CASE("protocol line parses into a trial") {
  auto trials = parse("LA_0015 LA_E_8147880 bonafide target\n");
  REQUIRE(trials.size() == 1);
  CHECK(trials[0].speaker_model == "LA_0015");
  CHECK(trials[0].test_utterance == "LA_E_8147880");
  CHECK(trials[0].attack_type == "bonafide");
  CHECK(trials[0].trial_type == TrialType::kTarget);
  CHECK(trials[0].is_bonafide());
}

TEST_CASE("all three trial type tokens are recognized") {
  auto trials = parse(
      "s1 u1 bonafide target\n"
      "s1 u2 bonafide nontarget\n"
      "s1 u3 A07 spoof\n");
  REQUIRE(trials.size() == 3);
  CHECK(trials[1].trial_type == TrialType::kNontarget);
  CHECK(trials[2].trial_type == TrialType::kSpoof);
  CHECK(trials[2].attack_type == "A07");
}

TEST_CASE("empty protocol input is an error") {
  CHECK_THROWS_WITH(parse(""), Catch::Matchers::ContainsSubstring("no trials"));
  CHECK_THROWS_WITH(parse("# only a comment\n\n"),
                    Catch::Matchers::ContainsSubstring("no trials"));
}

TEST_CASE("bonafide/spoof inconsistency is rejected both ways") {
  CHECK_THROWS_WITH(parse("LA_0015 LA_E_1 A07 target\n"),
                    Catch::Matchers::ContainsSubstring("bonafide/spoof inconsistency"));
  CHECK_THROWS_WITH(parse("LA_0015 LA_E_1 A07 nontarget\n"),
                    Catch::Matchers::ContainsSubstring("bonafide/spoof inconsistency"));
  CHECK_THROWS_WITH(parse("LA_0015 LA_E_1 bonafide spoof\n"),
                    Catch::Matchers::ContainsSubstring("bonafide/spoof inconsistency"));
}

TEST_CASE("field count and token errors carry line numbers") {
  try {
    parse("s1 u1 bonafide target\ns2 u2 bonafide\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("expected 4 fields, got 3"));
  }
  try {
    parse("s1 u1 bonafide targget\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("unknown trial type"));
  }
}

TEST_CASE("duplicate speaker/utterance pairs are rejected") {
  CHECK_THROWS_WITH(parse("s1 u1 bonafide target\ns1 u1 A01 spoof\n"),
                    Catch::Matchers::ContainsSubstring("duplicate trial"));
}

TEST_CASE("CRLF, blank lines, comments and messy whitespace are tolerated") {
  auto trials = parse("\n# header comment\r\ns1  \t u1   bonafide\ttarget\r\n\ns2 u2 A01 spoof\r\n");
  REQUIRE(trials.size() == 2);
  CHECK(trials[0].test_utterance == "u1");
  CHECK(trials[1].trial_type == TrialType::kSpoof);
}

TEST_CASE("enrollment map parses one speaker per line") {
  std::istringstream in("LA_0015 LA_E_a LA_E_b\nLA_0016 LA_E_c\n");
  EnrollmentMap map = parse_enrollment_map(in);
  REQUIRE(map.size() == 2);
  REQUIRE(map.find("LA_0015") != nullptr);
  CHECK(*map.find("LA_0015") == std::vector<std::string>{"LA_E_a", "LA_E_b"});
  CHECK(*map.find("LA_0016") == std::vector<std::string>{"LA_E_c"});
  CHECK(map.find("LA_0017") == nullptr);
}

TEST_CASE("enrollment map rejects duplicates and empty utterance lists") {
  auto parse_map = [](const std::string& text) {
    std::istringstream in(text);
    return parse_enrollment_map(in);
  };
  CHECK_THROWS_WITH(parse_map("LA_0015 LA_E_a\nLA_0015 LA_E_b\n"),
                    Catch::Matchers::ContainsSubstring("duplicate speaker"));
  CHECK_THROWS_WITH(parse_map("LA_0015 LA_E_a LA_E_a\n"),
                    Catch::Matchers::ContainsSubstring("duplicate enrollment utterance"));
  CHECK_THROWS_WITH(parse_map("LA_0015\n"),
                    Catch::Matchers::ContainsSubstring("no enrollment utterances"));
}

TEST_CASE("make_protocol enforces cross invariants") {
  EnrollmentMap enrollment;
  enrollment.add("s1", {"e1"});
  std::vector<Trial> trials{
      Trial{"s1", "u1", "bonafide", TrialType::kTarget},
      Trial{"s1", "u2", "A01", TrialType::kSpoof},
  };
  CHECK_NOTHROW(make_protocol(trials, enrollment));

  std::vector<Trial> foreign{
      Trial{"s1", "u1", "bonafide", TrialType::kTarget},
      Trial{"s9", "u2", "A01", TrialType::kSpoof},
  };
  CHECK_THROWS_WITH(make_protocol(foreign, enrollment),
                    Catch::Matchers::ContainsSubstring("missing from enrollment map"));

  std::vector<Trial> no_target{Trial{"s1", "u2", "A01", TrialType::kSpoof}};
  CHECK_THROWS_WITH(make_protocol(no_target, EnrollmentMap{}),
                    Catch::Matchers::ContainsSubstring("no target trials"));

  std::vector<Trial> only_target{Trial{"s1", "u1", "bonafide", TrialType::kTarget}};
  CHECK_THROWS_WITH(make_protocol(only_target, EnrollmentMap{}),
                    Catch::Matchers::ContainsSubstring("no nontarget or spoof"));
}

TEST_CASE("subset picks exactly the requested types, in order") {
  sasv::Rng rng(101);
  TrialProtocol protocol = sasv_test::random_protocol(rng, 10, 7, 13);

  auto sv_set = subset(protocol, {TrialType::kTarget, TrialType::kNontarget});
  CHECK(sv_set.size() == 17);
  for (const auto& t : sv_set) CHECK(t.trial_type != TrialType::kSpoof);

  CHECK(subset(protocol, {}).empty());

  auto all = subset(protocol,
                    {TrialType::kTarget, TrialType::kNontarget, TrialType::kSpoof});
  CHECK(all == protocol.trials);
}

TEST_CASE("subset preserves protocol order") {
  sasv::Rng rng(555);
  TrialProtocol protocol = sasv_test::random_protocol(rng, 20, 20, 20);
  auto targets = subset(protocol, {TrialType::kTarget});
  std::size_t cursor = 0;
  for (const auto& t : protocol.trials)
    if (t.trial_type == TrialType::kTarget) {
      REQUIRE(cursor < targets.size());
      CHECK(targets[cursor++] == t);
    }
  CHECK(cursor == targets.size());
}

TEST_CASE("disjoint subsets union to the combined subset and partition the protocol") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    sasv::Rng rng(seed);
    TrialProtocol protocol =
        sasv_test::random_protocol(rng, 1 + rng.below(20), rng.below(20), 1 + rng.below(20));

    auto a = subset(protocol, {TrialType::kTarget});
    auto b = subset(protocol, {TrialType::kSpoof});
    auto ab = subset(protocol, {TrialType::kTarget, TrialType::kSpoof});
    auto key_counts = [](const std::vector<Trial>& ts) {
      std::map<std::string, int> counts;
      for (const auto& t : ts) ++counts[trial_key(t)];
      return counts;
    };
    auto united = key_counts(a);
    for (const auto& [k, v] : key_counts(b)) united[k] += v;
    CHECK(united == key_counts(ab));

    std::size_t total = subset(protocol, {TrialType::kTarget}).size() +
                        subset(protocol, {TrialType::kNontarget}).size() +
                        subset(protocol, {TrialType::kSpoof}).size();
    CHECK(total == protocol.trials.size());
  }
}

TEST_CASE("serialize(parse(x)) normalizes whitespace and round trips") {
  const std::string messy = "s1 \t u1  bonafide target\r\ns2 u2 A01\tspoof\n";
  const std::string canonical = "s1 u1 bonafide target\ns2 u2 A01 spoof\n";
  CHECK(serialize(parse(messy)) == canonical);
  CHECK(serialize(parse(canonical)) == canonical);
}

TEST_CASE("random protocols round trip byte-identically") {
  for (std::uint64_t seed = 30; seed < 50; ++seed) {
    sasv::Rng rng(seed);
    TrialProtocol protocol =
        sasv_test::random_protocol(rng, 1 + rng.below(30), rng.below(30), 1 + rng.below(30));
    const std::string once = serialize(protocol.trials);
    std::istringstream in(once);
    const std::string twice = serialize(parse_protocol(in));
    CHECK(once == twice);

    std::ostringstream enroll_once;
    write_enrollment_map(enroll_once, protocol.enrollment);
    std::istringstream enroll_in(enroll_once.str());
    std::ostringstream enroll_twice;
    write_enrollment_map(enroll_twice, parse_enrollment_map(enroll_in));
    CHECK(enroll_once.str() == enroll_twice.str());
  }
}
