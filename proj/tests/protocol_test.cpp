#include <gtest/gtest.h>

#include "rcons/simnet.hpp"

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

}  // namespace

TEST(Protocol, FailureFreeNewEpochDecidesFirstAgentsValue) {
  auto cfg = config(Variant::NewEpoch, 3, 1);
  auto types = TypeVector::from_tops({2, 0, 1}, 3);
  auto t = run(cfg, types, FailurePattern(3, 1));
  ASSERT_FALSE(t.horizon_exhausted);
  EXPECT_EQ(t.agents[0].decision, Decision::of(2));
  EXPECT_EQ(t.agents[0].decide_round, 1);
  for (int i = 1; i < 3; ++i) {
    EXPECT_EQ(t.agents[i].decision, Decision::of(2)) << i;
    EXPECT_EQ(t.agents[i].decide_round, 2);
  }
  EXPECT_LE(t.rounds_run, 3);
}
