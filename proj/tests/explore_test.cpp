#include <gtest/gtest.h>

#include <chrono>
#include <map>
#include <sstream>

#include "rcons/explore.hpp"

using namespace rcons;

namespace {

ProtocolConfig config(Variant v, int n, int f) {
  ProtocolConfig c;
  c.variant = v;
  c.n = n;
  c.declared_f = f;
  c.value_count = 3;
  return c;
}

std::string outcome_key(const RunTranscript& t) {
  std::ostringstream os;
  for (const auto& a : t.agents)
    os << a.id << ':' << a.decision.to_string() << '@' << a.decide_round << ' ';
  return os.str();
}

}  // namespace

TEST(Explore, WeightedOutcomesMatchBruteForce) {
  for (Variant v : {Variant::NewEpoch, Variant::NewEpoch2, Variant::RandNewEpoch2}) {
    auto cfg = config(v, 3, 2);
    auto types = TypeVector::from_tops({1, 2, 0}, 3);
    const Round bound = 7;
    std::map<std::string, std::uint64_t> brute, dfs;
    for_each_failure_pattern(3, 2, bound, Granularity::Fine, [&](const FailurePattern& fp) {
      EngineOptions eo;
      eo.record = false;
      ++brute[outcome_key(run(cfg, types, fp, eo))];
    });
    ExploreOptions o;
    o.crash_round_bound = bound;
    o.budget = 2;
    auto st = explore(cfg, types, nullptr, o, [&](const Engine& e, std::uint64_t m) {
      dfs[outcome_key(e.transcript())] += m;
      return true;
    });
    EXPECT_EQ(st.patterns, count_failure_patterns(3, 2, bound, Granularity::Fine));
    EXPECT_EQ(st.patterns, explored_pattern_count(3, o));
    EXPECT_EQ(brute, dfs) << to_string(v);
    EXPECT_LT(st.leaves, st.patterns);
  }
}

TEST(Explore, CoarseCountMatchesClosedForm) {
  auto cfg = config(Variant::NewEpoch, 4, 2);
  auto types = TypeVector::from_tops({0, 1, 2, 0}, 3);
  ExploreOptions o;
  o.granularity = Granularity::Coarse;
  o.crash_round_bound = 5;
  o.budget = 2;
  auto st = explore(cfg, types, nullptr, o, [](const Engine&, std::uint64_t) { return true; });
  EXPECT_EQ(st.patterns, count_failure_patterns(4, 2, 5, Granularity::Coarse));
}

TEST(Explore, FixedBaseRestrictsBranching) {
  auto cfg = config(Variant::NewEpoch2, 4, 2);
  auto types = TypeVector::from_tops({0, 1, 2, 0}, 3);
  ExploreOptions o;
  o.crash_round_bound = 4;
  o.budget = 2;
  o.base = FailurePattern(4, 2);
  o.base.set_crash(1, CrashSpec{1, agent_bit(2)});
  auto st = explore(cfg, types, nullptr, o, [](const Engine& e, std::uint64_t) {
    EXPECT_TRUE(e.pattern().crash(1).has_value());
    return true;
  });
  EXPECT_EQ(st.patterns, explored_pattern_count(4, o));
  EXPECT_EQ(st.patterns, 1u + 3u * 4u * 7u);
}

TEST(Explore, StopsWhenVisitorDeclines) {
  auto cfg = config(Variant::NewEpoch, 3, 1);
  auto types = TypeVector::from_tops({0, 1, 2}, 3);
  ExploreOptions o;
  o.crash_round_bound = 5;
  o.budget = 1;
  int seen = 0;
  auto st = explore(cfg, types, nullptr, o, [&](const Engine&, std::uint64_t) { return ++seen < 3; });
  EXPECT_TRUE(st.stopped);
  EXPECT_EQ(seen, 3);
}
