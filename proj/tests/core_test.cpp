#include <gtest/gtest.h>

#include <set>

#include "rcons/core.hpp"

using namespace rcons;

TEST(FailurePattern, PartialCrashDeliversOnlyToListedReceivers) {
  FailurePattern f(3, 1);
  f.set_crash(1, CrashSpec{2, agent_bit(2)});
  EXPECT_TRUE(f.is_delivered({1, 2, 2}));
  EXPECT_FALSE(f.is_delivered({1, 3, 2}));
  EXPECT_FALSE(f.is_delivered({1, 2, 3}));
  EXPECT_TRUE(f.is_delivered({1, 3, 1}));
  EXPECT_TRUE(f.alive_through(1, 1));
  EXPECT_FALSE(f.alive_through(1, 2));
}

TEST(FailurePattern, FailureFreeDeliversEverything) {
  FailurePattern f(4, 2);
  for (Round r = 1; r <= 6; ++r)
    for (AgentId i = 1; i <= 4; ++i)
      for (AgentId j = 1; j <= 4; ++j)
        if (i != j) EXPECT_TRUE(f.is_delivered({i, j, r}));
}

TEST(FailurePattern, DeliverableTriplesByBruteForce) {
  FailurePattern f(3, 1);
  f.set_crash(2, CrashSpec{1, 0});
  int from2 = 0, total = 0;
  for (Round r = 1; r <= 3; ++r)
    for (AgentId i = 1; i <= 3; ++i)
      for (AgentId j = 1; j <= 3; ++j) {
        if (i == j || !f.is_delivered({i, j, r})) continue;
        ++total;
        if (i == 2) ++from2;
      }
  EXPECT_EQ(from2, 0);
  EXPECT_EQ(total, 12);
}

TEST(Canonicalize, FullDeliveryMovesCrashOneRoundLater) {
  auto f = canonicalize(3, 1, {{1, 2, others(3, 1)}});
  ASSERT_TRUE(f.crash(1));
  EXPECT_EQ(f.crash(1)->crash_round, 3);
  EXPECT_EQ(f.crash(1)->delivered, 0u);
}

TEST(Canonicalize, PartialDeliveryUnchanged) {
  auto f = canonicalize(3, 1, {{1, 2, agent_bit(2)}});
  EXPECT_EQ(f.crash(1)->crash_round, 2);
  EXPECT_EQ(f.crash(1)->delivered, agent_bit(2));
}

TEST(Canonicalize, RejectsTooManyCrashes) {
  EXPECT_THROW(canonicalize(4, 1, {{1, 1, 0}, {2, 1, 0}}), ModelError);
}

TEST(Canonicalize, RejectsSelfDeliveryAndBadIds) {
  EXPECT_THROW(canonicalize(3, 1, {{1, 1, agent_bit(1)}}), ModelError);
  EXPECT_THROW(canonicalize(3, 1, {{4, 1, 0}}), ModelError);
  EXPECT_THROW(canonicalize(3, 2, {{1, 1, 0}, {1, 2, 0}}), ModelError);
}

TEST(Canonicalize, IsIdempotentOnCanonicalPatterns) {
  for (const auto& f : enumerate_failure_patterns(3, 2, 3, Granularity::Fine))
    EXPECT_EQ(canonicalize(f), f);
}

namespace {

// independent oracle: every assignment of (round, proper delivered subset)
// or "no crash" per agent, at most f crashes
std::set<std::string> brute_patterns(int n, int f, Round h, Granularity g) {
  std::set<std::string> out;
  std::vector<std::vector<std::optional<CrashSpec>>> per(n);
  for (AgentId a = 1; a <= n; ++a) {
    per[a - 1].push_back(std::nullopt);
    for (Round r = 1; r <= h; ++r)
      for (AgentSet d = 0; d <= all_agents(n); ++d) {
        if (d & agent_bit(a)) continue;
        if (d == others(n, a)) continue;
        if (g == Granularity::Coarse && d != 0) continue;
        per[a - 1].push_back(CrashSpec{r, d});
      }
  }
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    FailurePattern fp(n, f);
    int c = 0;
    for (AgentId a = 1; a <= n; ++a) {
      fp.set_crash(a, per[a - 1][idx[a - 1]]);
      if (per[a - 1][idx[a - 1]]) ++c;
    }
    if (c <= f) out.insert(fp.to_string());
    int i = 0;
    while (i < n && ++idx[i] == per[i].size()) idx[i++] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace

TEST(Enumerate, ThreeAgentsOneCrashTwoRoundsFine) {
  auto brute = brute_patterns(3, 1, 2, Granularity::Fine);
  EXPECT_EQ(brute.size(), 19u);
  auto pats = enumerate_failure_patterns(3, 1, 2, Granularity::Fine);
  std::set<std::string> got;
  for (const auto& p : pats) got.insert(p.to_string());
  EXPECT_EQ(got.size(), pats.size());
  EXPECT_EQ(got, brute);
  EXPECT_EQ(count_failure_patterns(3, 1, 2, Granularity::Fine), 19u);
}

TEST(Enumerate, NoCrashesGivesOnlyFailureFree) {
  for (Round h : {1, 3, 7}) {
    auto pats = enumerate_failure_patterns(3, 0, h, Granularity::Fine);
    ASSERT_EQ(pats.size(), 1u);
    EXPECT_EQ(pats[0].crash_count(), 0);
  }
}

TEST(Enumerate, CoarseFourAgentsTwoCrashesOneRound) {
  EXPECT_EQ(brute_patterns(4, 2, 1, Granularity::Coarse).size(), 11u);
  EXPECT_EQ(enumerate_failure_patterns(4, 2, 1, Granularity::Coarse).size(), 11u);
  EXPECT_EQ(count_failure_patterns(4, 2, 1, Granularity::Coarse), 11u);
}

TEST(Enumerate, ClosedFormMatchesBruteForce) {
  for (int n : {3, 4})
    for (int f = 0; f < n; ++f)
      for (Round h : {1, 2})
        for (auto g : {Granularity::Fine, Granularity::Coarse})
          EXPECT_EQ(count_failure_patterns(n, f, h, g), brute_patterns(n, f, h, g).size())
              << n << ' ' << f << ' ' << h;
}

TEST(PatternText, RoundTrips) {
  for (const auto& f : enumerate_failure_patterns(4, 2, 2, Granularity::Fine)) {
    std::string text = f.to_string();
    auto open = text.find('[');
    auto inner = text.substr(open + 1, text.rfind(']') - open - 1);
    EXPECT_EQ(parse_pattern(4, 2, inner), f) << text;
  }
}

TEST(PatternText, OuterBracketsOptionalAndCanonicalizes) {
  EXPECT_EQ(parse_pattern(3, 2, "[1@2{} 2@1{1,3}]"), parse_pattern(3, 2, "1@2{} 2@1{1,3}"));
  auto f = parse_pattern(3, 2, "1@2{} 2@1{1,3}");
  EXPECT_EQ(f.crash(1)->crash_round, 2);
  EXPECT_EQ(f.crash(1)->delivered, 0u);
  EXPECT_EQ(f.crash(2)->crash_round, 2);
  EXPECT_EQ(f.crash(2)->delivered, 0u);
  EXPECT_THROW(parse_pattern(3, 1, "1@2{} 2@1{}"), ModelError);
  EXPECT_THROW(parse_pattern(3, 1, "1@2"), ModelError);
  EXPECT_THROW(parse_pattern(3, 1, "x"), ModelError);
}

TEST(TypeVectorText, RoundTrips) {
  auto tv = TypeVector::parse("012 201 102");
  EXPECT_EQ(tv.n(), 3);
  EXPECT_EQ(tv.top(2), 2);
  EXPECT_EQ(tv.of(3).rank(0), 1);
  std::string s = tv.to_string();
  EXPECT_EQ(TypeVector::parse(s.substr(1, s.size() - 2)), tv);
  EXPECT_THROW(TypeVector::parse("011 012"), ModelError);
}

TEST(Preferences, WithTopKeepsTheRestAscending) {
  auto p = PreferenceOrder::with_top(2, 4);
  EXPECT_EQ(p.ranking(), (std::vector<Value>{2, 0, 1, 3}));
  EXPECT_TRUE(p.prefers(2, 0));
  EXPECT_THROW(PreferenceOrder({0, 0, 1}), ModelError);
}

TEST(Utility, PunishmentAndViolationsAreNegInfinity) {
  auto p = PreferenceOrder::with_top(1, 3);
  EXPECT_EQ(utility(p, Decision::of(1), true, false), Utility::finite(3));
  EXPECT_EQ(utility(p, Decision::of(2), true, false), Utility::finite(1));
  EXPECT_EQ(utility(p, Decision::of(1), false, false), Utility::neg_inf());
  EXPECT_EQ(utility(p, Decision::punish(), true, false), Utility::neg_inf());
  EXPECT_EQ(utility(p, Decision::undecided(), true, true), Utility::finite(0));
  EXPECT_LT(Utility::neg_inf(), Utility::finite(-100));
  EXPECT_LT(Utility::finite(1), Utility::finite(2));
}
