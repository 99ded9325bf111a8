#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "rcons/msggraph.hpp"
#include "rcons/simnet.hpp"
#include "rcons/verify.hpp"

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

std::vector<MessageId> round_messages(int n, Round r) {
  std::vector<MessageId> out;
  for (AgentId p = 1; p <= n; ++p)
    for (AgentId q = 1; q <= n; ++q)
      if (p != q) out.push_back({p, q, r});
  return out;
}

bool lost(Label l) { return l == Label::NotSent || l == Label::NeverKnown; }

// Every sequence starting at m that satisfies the chain clauses, found by
// trying all message combinations round by round.
std::set<std::vector<MessageId>> chains_by_product(const MsgGraph& g, const MessageId& m, Round k) {
  std::set<std::vector<MessageId>> out;
  std::vector<std::vector<MessageId>> frontier{{m}};
  while (!frontier.empty()) {
    std::vector<std::vector<MessageId>> next;
    for (const auto& seq : frontier) {
      const auto& last = seq.back();
      bool ok = true;
      for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        if (g.label(seq[i]) != Label::Uncertain) ok = false;
      if (!ok) continue;
      if (last.round == k || g.label(last) != Label::Uncertain) out.insert(seq);
      if (last.round >= k) continue;
      for (const auto& x : round_messages(g.n(), last.round + 1)) {
        if (x.sender != last.sender && x.sender != last.receiver) continue;
        auto s = seq;
        s.push_back(x);
        next.push_back(std::move(s));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

bool all_chains_lost(const MsgGraph& g, const MessageId& m, Round k) {
  for (const auto& c : chains_by_product(g, m, k))
    if (!lost(g.label(c.back()))) return false;
  return true;
}

// Reference closure: pick a random Uncertain message, apply any rule that
// fires, repeat until a full pass changes nothing.
MsgGraph naive_closure(MsgGraph g, const std::vector<const MsgGraph*>& peers, Round k,
                       std::mt19937& rng, int& clashes) {
  const int n = g.n();
  const AgentId self = g.owner();
  g.advance_to(k);
  std::vector<MessageId> all;
  for (Round r = 1; r <= k; ++r)
    for (const auto& m : round_messages(n, r)) all.push_back(m);
  for (bool changed = true; changed;) {
    changed = false;
    std::shuffle(all.begin(), all.end(), rng);
    for (const auto& m : all) {
      if (g.label(m) != Label::Uncertain) continue;
      const auto [p, q, r] = m;
      bool sent = false, not_sent = false, never = false;
      if (q == self && r == k) (peers[p] ? sent : not_sent) = true;
      if (p == self) sent = true;
      for (AgentId j = 1; j <= n; ++j) {
        if (!peers[j] || j == self) continue;
        if (peers[j]->label(m) == Label::Sent) sent = true;
        if (peers[j]->label(m) == Label::NotSent) not_sent = true;
      }
      if (r > 1)
        for (AgentId j = 1; j <= n; ++j)
          if (j != p && g.label(p, j, r - 1) == Label::NotSent) not_sent = true;
      bool prev_ok = true;
      if (r > 1)
        for (AgentId j = 1; j <= n; ++j)
          if (j != p && g.label(p, j, r - 1) != Label::Sent && g.label(p, j, r - 1) != Label::NeverKnown)
            prev_ok = false;
      if (prev_ok && all_chains_lost(g, m, k)) never = true;
      if (sent && not_sent) ++clashes;
      std::vector<Label> options;
      if (sent) options.push_back(Label::Sent);
      if (not_sent) options.push_back(Label::NotSent);
      if (never) options.push_back(Label::NeverKnown);
      if (options.empty()) continue;
      if (options.size() > 1) ++clashes;
      g.set_label(m, options[rng() % options.size()]);
      changed = true;
    }
  }
  return g;
}

}  // namespace

TEST(MessageChains, CurrentRoundMessageIsItsOwnChain) {
  MsgGraph g(3, 1);
  g.advance_to(2);
  auto c = message_chains(g, {2, 3, 2}, 2);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (std::vector<MessageId>{{2, 3, 2}}));
}

TEST(MessageChains, MatchProductEnumerationOnRandomGraphs) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 2;
    const Round k = 3 + trial % 2;
    MsgGraph g(n, 1);
    g.advance_to(k);
    for (Round r = 1; r <= k; ++r)
      for (const auto& m : round_messages(n, r))
        if (rng() % 3 == 0) g.set_label(m, static_cast<Label>(1 + rng() % 3));
    for (const auto& m : round_messages(n, 1 + trial % (k - 1))) {
      if (g.label(m) != Label::Uncertain) continue;
      auto got = message_chains(g, m, k);
      std::set<std::vector<MessageId>> mine(got.begin(), got.end());
      EXPECT_EQ(mine.size(), got.size());
      EXPECT_EQ(mine, chains_by_product(g, m, k));
      EXPECT_EQ(chains_all_end_lost(g, m, k), all_chains_lost(g, m, k));
    }
  }
}

TEST(Closure, MatchesOneRuleAtATimeOracleOnRuns) {
  std::mt19937 rng(5);
  int checked = 0, clashes = 0;
  for (Variant v : {Variant::NewEpoch, Variant::NewEpoch2, Variant::RandNewEpoch2}) {
    auto cfg = config(v, 4, 3);
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
      auto fp = seed % 2 ? random_dictator_pattern(4, 3, seed) : random_pattern(4, 3, 5, seed);
      EngineOptions eo;
      eo.record = false;
      Engine e(cfg, TypeVector::from_tops({0, 1, 2, 0}, 3), fp, eo);
      while (!e.finished()) {
        e.prepare_round();
        const Round k = e.round() + 1;
        std::vector<std::pair<AgentId, MsgGraph>> expect;
        for (AgentId i = 1; i <= 4; ++i) {
          if (!e.sending(i) || !fp.alive_through(i, k)) continue;
          std::vector<const MsgGraph*> peers(5, nullptr);
          for (AgentId a = 1; a <= 4; ++a) {
            if (a == i || !e.sending(a) || !fp.is_delivered({a, i, k})) continue;
            const auto& p = e.outbox(a)[i];
            if (p) peers[a] = p->graph.get();
          }
          expect.push_back({i, naive_closure(e.machines()[i - 1].graph(), peers, k, rng, clashes)});
        }
        e.finish_round();
        for (const auto& [i, g] : expect) {
          ++checked;
          EXPECT_TRUE(e.machines()[i - 1].graph().same_labels(g))
              << to_string(v) << ' ' << fp.to_string() << " agent " << i << " round " << k;
        }
      }
    }
  }
  EXPECT_GT(checked, 500);
  EXPECT_EQ(clashes, 0);
}

TEST(Closure, FailureFreeRoundOneKnownAfterRoundTwo) {
  auto cfg = config(Variant::NewEpoch, 4, 1);
  Engine e(cfg, TypeVector::from_tops({0, 1, 2, 0}, 3), FailurePattern(4, 1));
  for (int r = 0; r < 2; ++r) {
    e.prepare_round();
    e.finish_round();
  }
  for (const auto& m : e.machines())
    for (const auto& id : round_messages(4, 1)) EXPECT_EQ(m.graph().label(id), Label::Sent);
}

TEST(Closure, LostFirstMessageBecomesNotSentAtFifthAgent) {
  // p1 misses only p2 in round 1, p2 crashes in round 2 telling only p4
  auto cfg = config(Variant::NewEpoch, 5, 4);
  auto fp = parse_pattern(5, 4, "1@1{3,4,5} 2@2{4}");
  Engine e(cfg, TypeVector::from_tops({0, 1, 1, 2, 2}, 3), fp);
  for (int r = 0; r < 3; ++r) {
    e.prepare_round();
    e.finish_round();
  }
  EXPECT_EQ(e.machines()[4].graph().label({1, 2, 1}), Label::NotSent);
}

TEST(Closure, ReportsConflictingPeers) {
  MsgGraph mine(3, 3), a(3, 1), b(3, 2);
  mine.advance_to(1);
  a.set_label({1, 2, 1}, Label::Sent);
  b.set_label({1, 2, 1}, Label::NotSent);
  std::vector<const MsgGraph*> peers{nullptr, &a, &b, nullptr};
  auto res = apply_labeling_closure(mine, peers, 2);
  ASSERT_EQ(res.conflicts.size(), 1u);
  EXPECT_EQ(res.conflicts[0].message, (MessageId{1, 2, 1}));
  EXPECT_EQ(res.live, agent_bit(1) | agent_bit(2));
}

TEST(Tags, DirectTagIsRecorded) {
  MsgGraph g(3, 2);
  auto c = merge_tags(g, std::pair{MessageId{1, 2, 1}, Tag{42}}, {});
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(g.tag({1, 2, 1}), Tag{42});
}

TEST(Tags, EmptyMergeLeavesGraphUnchanged) {
  MsgGraph g(3, 2);
  g.advance_to(1);
  MsgGraph before = g;
  EXPECT_TRUE(merge_tags(g, std::nullopt, {}).empty());
  EXPECT_EQ(g, before);
}

TEST(Tags, SameTagFromTwoPeersMergesOnce) {
  MsgGraph g(4, 4);
  auto c = merge_tags(g, std::nullopt, {{{1, 2, 1}, Tag{7}}, {{1, 2, 1}, Tag{7}}});
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(g.tags().size(), 1u);
  c = merge_tags(g, std::nullopt, {{{1, 2, 1}, Tag{8}}});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].held, Tag{7});
}

TEST(Tags, WildcardIsRefinedNotConflicting) {
  MsgGraph g(3, 3);
  g.set_tag({1, 2, 1}, Tag{});
  EXPECT_TRUE(merge_tags(g, std::nullopt, {{{1, 2, 1}, Tag{9}}}).empty());
  EXPECT_EQ(g.tag({1, 2, 1}), Tag{9});
}

TEST(Tags, HonestRandomizedRunsNeverConflict) {
  auto cfg = config(Variant::RandNewEpoch2, 4, 2);
  for (std::uint64_t s = 0; s < 40; ++s) {
    cfg.seed = s;
    auto t = run(cfg, TypeVector::from_tops({0, 1, 2, 0}, 3), random_pattern(4, 2, 6, s));
    for (const auto& a : t.agents) EXPECT_TRUE(a.verdict.ok()) << a.verdict.to_string();
  }
}

TEST(OutgoingView, StripsOwnTagsOnly) {
  MsgGraph g(3, 2);
  g.set_tag({2, 3, 1}, Tag{5});
  g.set_tag({1, 2, 1}, Tag{6});
  g.set_label({2, 3, 1}, Label::Sent);
  auto v = outgoing_view(g);
  EXPECT_FALSE(v.has_tag({2, 3, 1}));
  EXPECT_EQ(v.tag({1, 2, 1}), Tag{6});
  EXPECT_TRUE(v.same_labels(g));
}

TEST(OutgoingView, OnlyOwnTagsGivesEmptyTagMap) {
  MsgGraph g(3, 1);
  g.set_tag({1, 2, 1}, Tag{5});
  g.set_tag({1, 3, 1}, Tag{6});
  EXPECT_TRUE(outgoing_view(g).tags().empty());
}

TEST(OutgoingView, DeterministicVariantCarriesNoTags) {
  auto cfg = config(Variant::NewEpoch2, 3, 1);
  Engine e(cfg, TypeVector::from_tops({0, 1, 2}, 3), FailurePattern(3, 1));
  e.prepare_round();
  e.finish_round();
  e.prepare_round();
  const auto& p = e.outbox(2)[3];
  ASSERT_TRUE(p);
  EXPECT_FALSE(p->graph->any_tags());
  EXPECT_TRUE(p->graph->same_labels(e.machines()[1].graph()));
}

TEST(Serialization, RoundTripsLabelsAndTags) {
  MsgGraph g(4, 3);
  g.set_label({1, 2, 1}, Label::NotSent);
  g.set_label({2, 4, 3}, Label::NeverKnown);
  g.set_tag({1, 3, 2}, Tag{0xdeadbeefcafeull});
  g.set_tag({4, 3, 2}, Tag{});
  auto bytes = serialize(g);
  auto back = deserialize_graph(bytes, 3);
  EXPECT_EQ(back, g);
  EXPECT_EQ(serialize(back), bytes);
  bytes.pop_back();
  EXPECT_THROW(deserialize_graph(bytes, 3), ModelError);
}

TEST(MsgGraph, RejectsSelfMessages) {
  MsgGraph g(3, 1);
  EXPECT_THROW(g.set_label({2, 2, 1}, Label::Sent), ModelError);
  EXPECT_EQ(g.label(2, 2, 1), Label::Uncertain);
}
