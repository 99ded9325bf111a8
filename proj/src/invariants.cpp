#include <algorithm>
#include <random>
#include <sstream>

#include "rcons/verify.hpp"

namespace rcons {

const char* to_string(RunProperty p) {
  switch (p) {
    case RunProperty::GroundTruth: return "ground-truth";
    case RunProperty::SingleTransition: return "single-transition";
    case RunProperty::AliveAgreement: return "alive-agreement";
    case RunProperty::NeverKnownExclusive: return "never-known-exclusive";
    case RunProperty::Transfer: return "transfer";
    case RunProperty::RoundCompleteness: return "round-completeness";
    case RunProperty::QuietRounds: return "quiet-rounds";
    case RunProperty::EventualLearning: return "eventual-learning";
    case RunProperty::NotSentStability: return "not-sent-stability";
    case RunProperty::NotSentReceiverAlive: return "not-sent-receiver-alive";
    case RunProperty::ChainStructure: return "chain-structure";
    case RunProperty::ChainUnique: return "chain-unique";
    case RunProperty::ChainPrefix: return "chain-prefix";
    case RunProperty::SingleNewEpoch: return "single-newepoch";
    case RunProperty::ChainTransfer: return "chain-transfer";
    case RunProperty::TerminationCascade: return "termination-cascade";
  }
  return "?";
}

std::vector<RunProperty> all_run_properties() {
  std::vector<RunProperty> out;
  for (int i = 0; i <= static_cast<int>(RunProperty::TerminationCascade); ++i)
    out.push_back(static_cast<RunProperty>(i));
  return out;
}

namespace {

struct RoundSnap {
  AgentSet ran = 0;                      // agents that completed the round
  std::vector<MsgGraph> graph;           // index agent; valid when ran
  std::vector<std::vector<AgentId>> chain;
  std::vector<AgentSet> transmitted;     // per sender: receivers F let through
  AgentSet ne_senders = 0;
  AgentSet decided = 0;
  AgentSet terminated_now = 0;
};

bool is_prefix(const std::vector<AgentId>& a, const std::vector<AgentId>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

class Checker {
 public:
  Checker(const ProtocolConfig& cfg, const FailurePattern& f, std::vector<RoundSnap> snaps,
          Round limit, PropertyReport& rep)
      : n_(cfg.n), f_(f), s_(std::move(snaps)), limit_(limit), rep_(rep) {
    rep_.checked.assign(all_run_properties().size(), 0);
  }

  void all() {
    for (Round r = 1; r <= limit_; ++r) {
      per_round(r);
      chains(r);
    }
    stability();
    never_known();
    cascade();
  }

 private:
  int n_;
  const FailurePattern& f_;
  std::vector<RoundSnap> s_;  // s_[r], r >= 1
  Round limit_;
  PropertyReport& rep_;

  const RoundSnap& at(Round r) const { return s_.at(static_cast<std::size_t>(r)); }
  bool ran(Round r, AgentId a) const { return r >= 1 && r <= limit_ && contains(at(r).ran, a); }
  Label lab(Round r, AgentId a, AgentId p, AgentId q, Round mr) const {
    return at(r).graph[a].label(p, q, mr);
  }
  bool alive_end(AgentId a, Round r) const {
    const auto& c = f_.crash(a);
    return !c || c->crash_round > r;
  }
  bool correct(AgentId a) const { return !f_.crash(a).has_value(); }
  bool sent(Round mr, AgentId p, AgentId q) const { return f_.is_delivered({p, q, mr}); }

  void count(RunProperty p) { ++rep_.checked[static_cast<std::size_t>(p)]; }
  void fail(RunProperty p, Round r, AgentId a, const std::string& d) {
    if (rep_.violations.size() < 64) rep_.violations.push_back({p, r, a, d});
  }
  static std::string msg(AgentId p, AgentId q, Round mr) {
    return to_string(MessageId{p, q, mr});
  }

  bool round_known(Round r, AgentId a, Round mr) const {
    for (AgentId p = 1; p <= n_; ++p)
      for (AgentId q = 1; q <= n_; ++q)
        if (p != q && lab(r, a, p, q, mr) == Label::Uncertain) return false;
    return true;
  }

  void per_round(Round r) {
    const auto& cur = at(r);
    for (AgentId a : members(cur.ran)) {
      // labels against what was transmitted; stability against last round
      count(RunProperty::GroundTruth);
      if (ran(r - 1, a)) count(RunProperty::SingleTransition);
      for (Round mr = 1; mr <= r; ++mr)
        for (AgentId p = 1; p <= n_; ++p)
          for (AgentId q = 1; q <= n_; ++q) {
            if (p == q) continue;
            Label l = lab(r, a, p, q, mr);
            if ((l == Label::Sent && !sent(mr, p, q)) || (l == Label::NotSent && sent(mr, p, q)))
              fail(RunProperty::GroundTruth, r, a, msg(p, q, mr) + " " + to_string(l));
            if (ran(r - 1, a) && mr < r) {
              Label old = lab(r - 1, a, p, q, mr);
              if (old != Label::Uncertain && old != l)
                fail(RunProperty::SingleTransition, r, a,
                     msg(p, q, mr) + " " + to_string(old) + "->" + to_string(l));
            }
            if (l == Label::NotSent) {
              bool prior = mr == 1;
              if (!prior) {
                prior = true;
                for (AgentId j = 1; j <= n_ && prior; ++j)
                  if (j != p) {
                    Label b = lab(r, a, p, j, mr - 1);
                    prior = b == Label::Sent || b == Label::NeverKnown;
                  }
              }
              if (prior) {
                count(RunProperty::NotSentReceiverAlive);
                if (!alive_end(q, mr))
                  fail(RunProperty::NotSentReceiverAlive, r, a, msg(p, q, mr));
              }
            }
          }
      // round completeness
      count(RunProperty::RoundCompleteness);
      bool later_complete = false;
      for (Round mr = r; mr >= 1; --mr) {
        bool c = round_known(r, a, mr);
        if (later_complete && !c) {
          fail(RunProperty::RoundCompleteness, r, a, "round " + std::to_string(mr) + " open");
          break;
        }
        later_complete = later_complete || c;
      }
    }
    // pairwise agreement among live agents
    auto live = members(cur.ran);
    for (std::size_t x = 0; x < live.size(); ++x)
      for (std::size_t y = x + 1; y < live.size(); ++y) {
        count(RunProperty::AliveAgreement);
        const auto& ga = cur.graph[live[x]].raw_labels();
        const auto& gb = cur.graph[live[y]].raw_labels();
        std::size_t m = std::min(ga.size(), gb.size());
        for (std::size_t i = 0; i < m; ++i)
          if (ga[i] && gb[i] && ga[i] != gb[i]) {
            fail(RunProperty::AliveAgreement, r, live[x],
                 "disagrees with agent " + std::to_string(live[y]));
            break;
          }
      }
    // transfer from senders of round r
    if (r >= 2)
      for (AgentId p = 1; p <= n_; ++p) {
        if (!ran(r - 1, p)) continue;
        for (AgentId q : members(cur.transmitted[p] & cur.ran)) {
          count(RunProperty::Transfer);
          for (const auto& [m, l] : at(r - 1).graph[p].labeled())
            if (lab(r, q, m.sender, m.receiver, m.round) == Label::Uncertain) {
              fail(RunProperty::Transfer, r, q, "missed " + to_string(m) + " from " + std::to_string(p));
              break;
            }
        }
      }
    // learning after quiet rounds
    Round tlast = 0;
    for (AgentId a = 1; a <= n_; ++a)
      if (const auto& c = f_.crash(a)) tlast = std::max(tlast, c->crash_round);
    bool quiet = r >= 2;
    for (AgentId a = 1; a <= n_ && quiet; ++a)
      if (const auto& c = f_.crash(a); c && (c->crash_round == r - 1 || c->crash_round == r))
        quiet = false;
    for (AgentId a : members(cur.ran)) {
      if (!correct(a)) continue;
      if (quiet) {
        count(RunProperty::QuietRounds);
        if (!round_known(r, a, r - 1))
          fail(RunProperty::QuietRounds, r, a, "round " + std::to_string(r - 1) + " open");
      }
      if (r >= tlast + 2) {
        count(RunProperty::EventualLearning);
        for (Round mr = 1; mr < r; ++mr)
          if (!round_known(r, a, mr)) {
            fail(RunProperty::EventualLearning, r, a, "round " + std::to_string(mr) + " open");
            break;
          }
      }
    }
    // one NEWEPOCH sender
    count(RunProperty::SingleNewEpoch);
    if (set_size(cur.ne_senders) > 1)
      fail(RunProperty::SingleNewEpoch, r, 0, "senders " + set_to_string(cur.ne_senders));
  }

  void chains(Round k) {
    const auto& cur = at(k);
    for (AgentId i : members(cur.ran)) {
      const auto& ch = cur.chain[i];
      count(RunProperty::ChainUnique);
      auto sorted = ch;
      std::sort(sorted.begin(), sorted.end());
      if (ch.empty() || ch.front() != 1 ||
          std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        fail(RunProperty::ChainUnique, k, i, "bad chain");
      count(RunProperty::ChainStructure);
      Round prev = 0;
      for (std::size_t l = 1; l < ch.size(); ++l) {
        const AgentId d0 = ch[l - 1], d1 = ch[l];
        Round found = 0;
        for (Round r = prev + 1; r <= k && !found; ++r) {
          if (lab(k, i, d0, d1, r) != Label::NotSent) continue;
          if (alive_end(d0, r) || !alive_end(d1, r)) continue;
          bool clean = true;
          if (r >= 2)
            for (AgentId j = 1; j <= n_; ++j)
              if (j != d0 && lab(k, i, d0, j, r - 1) == Label::NotSent) clean = false;
          if (clean) found = r;
        }
        if (!found) {
          fail(RunProperty::ChainStructure, k, i,
               "no witness for " + std::to_string(d0) + "->" + std::to_string(d1));
          break;
        }
        prev = found;
      }
    }
    auto live = members(cur.ran);
    for (std::size_t x = 0; x < live.size(); ++x)
      for (std::size_t y = x + 1; y < live.size(); ++y) {
        count(RunProperty::ChainPrefix);
        const auto& a = cur.chain[live[x]];
        const auto& b = cur.chain[live[y]];
        if (!is_prefix(a, b) && !is_prefix(b, a))
          fail(RunProperty::ChainPrefix, k, live[x], "vs agent " + std::to_string(live[y]));
      }
    if (k >= 2)
      for (AgentId i = 1; i <= n_; ++i) {
        if (!ran(k - 1, i)) continue;
        for (AgentId j : members(cur.transmitted[i] & cur.ran)) {
          count(RunProperty::ChainTransfer);
          if (!is_prefix(at(k - 1).chain[i], cur.chain[j]))
            fail(RunProperty::ChainTransfer, k, j, "from agent " + std::to_string(i));
        }
      }
  }

  void stability() {
    for (Round mr = 1; mr <= limit_; ++mr)
      for (AgentId p = 1; p <= n_; ++p)
        for (AgentId q = 1; q <= n_; ++q) {
          if (p == q) continue;
          count(RunProperty::NotSentStability);
          Round quiet = 0;
          for (Round r = mr; r <= limit_; ++r) {
            bool any = false;
            for (AgentId a : members(at(r).ran))
              if (lab(r, a, p, q, mr) == Label::NotSent) any = true;
            if (!any && !quiet && at(r).ran) quiet = r;
            if (any && quiet) {
              fail(RunProperty::NotSentStability, r, 0,
                   msg(p, q, mr) + " NotSent after quiet round " + std::to_string(quiet));
              break;
            }
          }
        }
  }

  void never_known() {
    // final labels of each agent are its last snapshot
    std::vector<Round> last(static_cast<std::size_t>(n_) + 1, 0);
    for (Round r = 1; r <= limit_; ++r)
      for (AgentId a : members(at(r).ran)) last[a] = r;
    for (Round r = 1; r <= limit_; ++r)
      for (AgentId p : members(at(r).ran))
        for (const auto& [m, l] : at(r).graph[p].labeled()) {
          if (l != Label::NeverKnown) continue;
          count(RunProperty::NeverKnownExclusive);
          for (AgentId i : members(at(r).ran)) {
            Label li = lab(last[i], i, m.sender, m.receiver, m.round);
            if (li == Label::Sent || li == Label::NotSent) {
              fail(RunProperty::NeverKnownExclusive, r, i,
                   to_string(m) + " never-known at " + std::to_string(p));
              break;
            }
          }
        }
  }

  void cascade() {
    for (Round k = 1; k <= limit_; ++k) {
      if (!at(k).terminated_now) continue;
      count(RunProperty::TerminationCascade);
      AgentSet open = at(k).ran & ~at(k).decided;
      if (open) fail(RunProperty::TerminationCascade, k, members(open).front(), "undecided");
      return;
    }
  }
};

}  // namespace

PropertyReport check_run_properties(const ProtocolConfig& cfg, const TypeVector& types,
                                    const FailurePattern& pattern, Round horizon) {
  EngineOptions eo;
  eo.horizon = horizon;
  eo.record = false;
  Engine e(cfg, types, pattern, eo);
  std::vector<RoundSnap> snaps(1);
  Round limit = 0;
  while (!e.finished()) {
    e.prepare_round();
    const Round k = e.round() + 1;
    RoundSnap s;
    s.graph.resize(static_cast<std::size_t>(cfg.n) + 1);
    s.chain.resize(static_cast<std::size_t>(cfg.n) + 1);
    s.transmitted.assign(static_cast<std::size_t>(cfg.n) + 1, 0);
    AgentSet was_running = 0;
    for (AgentId a = 1; a <= cfg.n; ++a) {
      if (!e.sending(a)) continue;
      was_running |= agent_bit(a);
      for (AgentId j : members(e.recipients(a))) {
        if (!e.pattern().is_delivered({a, j, k})) continue;
        s.transmitted[a] |= agent_bit(j);
        if (e.outbox(a)[j]->newepoch) s.ne_senders |= agent_bit(a);
      }
    }
    e.finish_round();
    bool any_term = false;
    for (AgentId a : members(was_running)) {
      const auto& m = e.machines()[a - 1];
      if (!e.pattern().alive_through(a, k)) continue;
      s.ran |= agent_bit(a);
      s.graph[a] = m.graph();
      s.chain[a] = m.dictator().chain;
      if (m.terminated()) {
        s.terminated_now |= agent_bit(a);
        any_term = true;
      }
    }
    for (AgentId a = 1; a <= cfg.n; ++a)
      if (e.machines()[a - 1].decision().decided()) s.decided |= agent_bit(a);
    snaps.push_back(std::move(s));
    limit = k;
    if (any_term) break;  // see header: checks stop at the first termination
  }
  PropertyReport rep;
  rep.evaluated_through = limit;
  Checker(cfg, pattern, std::move(snaps), limit, rep).all();
  return rep;
}

FailurePattern random_pattern(int n, int f, Round max_round, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> howmany(0, f);
  std::uniform_int_distribution<Round> when(1, max_round);
  std::vector<AgentId> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<RawCrash> raw;
  const int c = howmany(rng);
  for (int i = 0; i < c; ++i) {
    AgentId a = ids[static_cast<std::size_t>(i)];
    std::uniform_int_distribution<AgentSet> sub(0, all_agents(n));
    raw.push_back({a, when(rng), sub(rng) & others(n, a)});
  }
  return canonicalize(n, f, raw);
}

FailurePattern random_dictator_pattern(int n, int f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> howmany(1, f);
  std::uniform_int_distribution<Round> gap(0, 2);
  std::vector<RawCrash> raw;
  const int c = howmany(rng);
  Round r = 1 + gap(rng);
  for (AgentId a = 1; a <= c; ++a) {
    std::uniform_int_distribution<AgentSet> sub(0, all_agents(n));
    raw.push_back({a, r, sub(rng) & others(n, a)});
    r += gap(rng);
  }
  return canonicalize(n, f, raw);
}

}  // namespace rcons
