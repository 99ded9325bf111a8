#include "rcons/dictator.hpp"

#include <algorithm>
#include <bit>

namespace rcons {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::NewEpoch: return "NewEpoch";
    case Variant::NewEpoch2: return "NewEpoch2";
    case Variant::RandNewEpoch2: return "RandNewEpoch2";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "NewEpoch") return Variant::NewEpoch;
  if (s == "NewEpoch2") return Variant::NewEpoch2;
  if (s == "RandNewEpoch2") return Variant::RandNewEpoch2;
  throw ModelError("unknown protocol variant: " + s);
}

SplitLayout split_layout(int value_count) {
  if (value_count < 3) throw ModelError("value domain must have at least 3 values");
  SplitLayout l;
  l.total_bits = std::bit_width(static_cast<unsigned>(value_count - 1));
  l.hi_bits = (l.total_bits + 1) / 2;
  l.lo_bits = l.total_bits / 2;
  return l;
}

std::uint32_t first_half(Value v, int value_count) {
  return static_cast<std::uint32_t>(v) >> split_layout(value_count).lo_bits;
}

std::uint32_t second_half(Value v, int value_count) {
  auto lo = split_layout(value_count).lo_bits;
  return static_cast<std::uint32_t>(v) & ((1u << lo) - 1u);
}

Value join_halves(std::uint32_t hi, std::uint32_t lo, int value_count) {
  return static_cast<Value>((hi << split_layout(value_count).lo_bits) | lo);
}

std::optional<NewEpochMsg> phase1_send(DictatorState& st, Variant variant, AgentId self,
                                       Value v_self, int value_count, Round k) {
  if (st.dictator != self || st.decision.decided()) return std::nullopt;
  if (variant == Variant::RandNewEpoch2 && k == 1) return std::nullopt;  // exchange-only round
  if (!is_split(variant)) {
    if (st.ne_start == 0) st.ne_start = k;
    return NewEpochMsg{Part::Whole, self, k, static_cast<std::uint32_t>(v_self)};
  }
  if (st.ne_start == 0) {
    st.ne_start = k;
    return NewEpochMsg{Part::First, self, k, first_half(v_self, value_count)};
  }
  if (k == st.ne_start + 1)
    return NewEpochMsg{Part::Second, self, k, second_half(v_self, value_count)};
  return std::nullopt;
}

void record_newepoch(DictatorState& st, AgentId from, const NewEpochMsg& msg, Round k) {
  auto& slot = st.received.at(from)[static_cast<std::size_t>(msg.part)];
  if (!slot) slot = NewEpochRecord{k, msg.bits};
}

bool newepoch_complete(const DictatorState& st, Variant variant, Round k) {
  if (st.ne_start == 0) return false;
  return is_split(variant) ? st.ne_start + 1 <= k : st.ne_start <= k;
}

namespace {

bool round_settled(const MsgGraph& g, AgentId d, Round r) {
  for (AgentId j = 1; j <= g.n(); ++j) {
    if (j == d) continue;
    Label l = g.label(d, j, r);
    if (l != Label::Sent && l != Label::NeverKnown) return false;
  }
  return true;
}

bool round_resolved(const MsgGraph& g, AgentId d, Round r) {
  for (AgentId j = 1; j <= g.n(); ++j)
    if (j != d && g.label(d, j, r) == Label::Uncertain) return false;
  return true;
}

}  // namespace

FollowCheck follow_check(const DictatorState& st, Variant variant, const MsgGraph& g,
                         int value_count, Round k) {
  FollowCheck out;
  const AgentId d = st.dictator;
  const auto& recs = st.received.at(d);
  if (!is_split(variant)) {
    const auto& w = recs[0];
    if (w && w->round < k && round_settled(g, d, w->round)) {
      out.decide = true;
      out.value = static_cast<Value>(w->bits);
    }
    return out;
  }
  const auto& a = recs[1];
  const auto& b = recs[2];
  if (!a && !b) return out;
  Round kp = a ? a->round : b->round - 1;
  if (kp < 1 || kp + 1 >= k) return out;
  if (!round_settled(g, d, kp) || !round_settled(g, d, kp + 1)) return out;
  if (a && b && b->round == kp + 1) {
    out.decide = true;
    out.value = join_halves(a->bits, b->bits, value_count);
  } else {
    out.missing_half = true;
  }
  return out;
}

std::optional<AgentId> change_step(const MsgGraph& g, AgentId d) {
  for (Round r = 1; r <= g.as_of(); ++r) {
    AgentId first_lost = 0;
    for (AgentId j = 1; j <= g.n() && !first_lost; ++j)
      if (j != d && g.label(d, j, r) == Label::NotSent) first_lost = j;
    if (!first_lost) continue;
    // r is the earliest round with a lost message from d
    if (r > 1 && !round_resolved(g, d, r - 1)) return std::nullopt;
    if (!round_resolved(g, d, r)) return std::nullopt;
    return first_lost;
  }
  return std::nullopt;
}

Phase2Outcome phase2_update(DictatorState& st, Variant variant, const MsgGraph& g,
                            AgentSet live_k, AgentId self, Value v_self, int value_count,
                            Round k) {
  Phase2Outcome out;
  if (st.decision.decided()) {
    if (st.decide_round == k - 1) out.terminate = true;
    return out;
  }
  auto decide = [&](Value v, AgentId from) {
    st.decision = Decision::of(v);
    st.decide_round = k;
    st.decided_from = from;
    out.decided_now = true;
  };
  if (st.dictator == self) {
    if (!st.decide1_disabled && newepoch_complete(st, variant, k)) decide(v_self, self);
    return out;
  }
  for (;;) {
    FollowCheck fc = follow_check(st, variant, g, value_count, k);
    if (fc.decide) {
      decide(fc.value, st.dictator);
      return out;
    }
    if (fc.missing_half) {
      st.missing_half = true;
      out.missing_half = true;
      return out;
    }
    if (contains(live_k, st.dictator)) return out;
    auto nd = change_step(g, st.dictator);
    if (!nd) return out;
    if (std::find(st.chain.begin(), st.chain.end(), *nd) != st.chain.end()) {
      st.chain_repeat = true;  // only reachable on inconsistent graphs
      return out;
    }
    st.dictator = *nd;
    st.chain.push_back(*nd);
  }
}

}  // namespace rcons
