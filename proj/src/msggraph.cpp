#include "rcons/msggraph.hpp"

#include <algorithm>

#include "rcons/wire.hpp"

namespace rcons {

const char* to_string(Label l) {
  switch (l) {
    case Label::Uncertain: return "uncertain";
    case Label::Sent: return "sent";
    case Label::NotSent: return "not-sent";
    case Label::NeverKnown: return "never-known";
  }
  return "?";
}

MsgGraph::MsgGraph(int n, AgentId owner) : n_(n), owner_(owner) {
  if (n < 1 || n > kMaxAgents) throw ModelError("agent count out of range");
}

void MsgGraph::advance_to(Round k) {
  if (k <= as_of_) return;
  as_of_ = k;
  labels_.resize(static_cast<std::size_t>(k) * n_ * n_, 0);
  if (!tags_.empty()) tags_.resize(labels_.size());
}

void MsgGraph::set_label(const MessageId& m, Label l) {
  if (m.sender == m.receiver) throw ModelError("self-addressed message");
  if (m.round < 1) throw ModelError("round must be >= 1");
  advance_to(m.round);
  labels_[index(m.sender, m.receiver, m.round)] = static_cast<std::uint8_t>(l);
}

bool MsgGraph::has_tag(const MessageId& m) const {
  if (tags_.empty() || m.round < 1 || m.round > as_of_ || m.sender == m.receiver) return false;
  return tags_[index(m.sender, m.receiver, m.round)].state != 0;
}

std::optional<Tag> MsgGraph::tag(const MessageId& m) const {
  if (!has_tag(m)) return std::nullopt;
  const auto& s = tags_[index(m.sender, m.receiver, m.round)];
  if (s.state == 2) return Tag{};
  return Tag{s.value};
}

void MsgGraph::set_tag(const MessageId& m, Tag t) {
  if (m.sender == m.receiver) throw ModelError("self-addressed message");
  advance_to(m.round);
  if (tags_.empty()) tags_.resize(labels_.size());
  auto& s = tags_[index(m.sender, m.receiver, m.round)];
  s.state = t.value ? 1 : 2;
  s.value = t.value.value_or(0);
}

void MsgGraph::clear_tag(const MessageId& m) {
  if (!has_tag(m)) return;
  tags_[index(m.sender, m.receiver, m.round)] = TagSlot{};
}

bool MsgGraph::any_tags() const {
  return std::any_of(tags_.begin(), tags_.end(), [](const TagSlot& s) { return s.state != 0; });
}

std::vector<std::pair<MessageId, Label>> MsgGraph::labeled() const {
  std::vector<std::pair<MessageId, Label>> out;
  for (Round r = 1; r <= as_of_; ++r)
    for (AgentId p = 1; p <= n_; ++p)
      for (AgentId q = 1; q <= n_; ++q) {
        if (p == q) continue;
        Label l = label(p, q, r);
        if (l != Label::Uncertain) out.push_back({{p, q, r}, l});
      }
  return out;
}

std::vector<std::pair<MessageId, Tag>> MsgGraph::tags() const {
  std::vector<std::pair<MessageId, Tag>> out;
  if (tags_.empty()) return out;
  for (Round r = 1; r <= as_of_; ++r)
    for (AgentId p = 1; p <= n_; ++p)
      for (AgentId q = 1; q <= n_; ++q) {
        if (p == q) continue;
        if (auto t = tag({p, q, r})) out.push_back({{p, q, r}, *t});
      }
  return out;
}

int MsgGraph::count(Label l) const {
  int c = 0;
  for (Round r = 1; r <= as_of_; ++r)
    for (AgentId p = 1; p <= n_; ++p)
      for (AgentId q = 1; q <= n_; ++q)
        if (p != q && label(p, q, r) == l) ++c;
  return c;
}

bool MsgGraph::same_labels(const MsgGraph& o) const {
  if (n_ != o.n_) return false;
  Round hi = std::max(as_of_, o.as_of_);
  for (Round r = 1; r <= hi; ++r)
    for (AgentId p = 1; p <= n_; ++p)
      for (AgentId q = 1; q <= n_; ++q)
        if (p != q && label(p, q, r) != o.label(p, q, r)) return false;
  return true;
}

bool operator==(const MsgGraph& a, const MsgGraph& b) {
  return a.owner_ == b.owner_ && a.same_labels(b) && a.tags() == b.tags();
}

namespace {

// good[idx]: every chain starting at this message (treated as a chain
// interior when Uncertain) ends at a NotSent or NeverKnown message.
void compute_good(const MsgGraph& g, Round k, std::vector<std::uint8_t>& good) {
  const int n = g.n();
  good.assign(static_cast<std::size_t>(k) * n * n, 0);
  std::vector<std::uint8_t> all_next(static_cast<std::size_t>(n) + 1, 0);
  for (Round r = k; r >= 1; --r) {
    for (AgentId s = 1; s <= n; ++s) {
      for (AgentId t = 1; t <= n; ++t) {
        if (s == t) continue;
        Label l = g.label(s, t, r);
        bool v;
        if (l != Label::Uncertain)
          v = (l == Label::NotSent || l == Label::NeverKnown);
        else if (r == k)
          v = false;
        else
          v = all_next[s] && all_next[t];
        good[g.index(s, t, r)] = v;
      }
    }
    // successors of a round-(r-1) message come from round r
    for (AgentId s = 1; s <= n; ++s) {
      bool all = true;
      for (AgentId x = 1; x <= n && all; ++x)
        if (x != s && !good[g.index(s, x, r)]) all = false;
      all_next[s] = all;
    }
  }
}

bool prev_round_known(const MsgGraph& g, AgentId p, Round r) {
  if (r == 1) return true;
  for (AgentId j = 1; j <= g.n(); ++j) {
    if (j == p) continue;
    Label l = g.label(p, j, r - 1);
    if (l != Label::Sent && l != Label::NeverKnown) return false;
  }
  return true;
}

}  // namespace

bool chains_all_end_lost(const MsgGraph& g, const MessageId& m, Round k) {
  std::vector<std::uint8_t> good;
  compute_good(g, k, good);
  return good[g.index(m.sender, m.receiver, m.round)] != 0;
}

ClosureResult apply_labeling_closure(MsgGraph& g, const std::vector<const MsgGraph*>& peers,
                                     Round k, AgentSet own_omitted) {
  const int n = g.n();
  const AgentId self = g.owner();
  if (static_cast<int>(peers.size()) != n + 1) throw ModelError("peer vector must have n+1 slots");
  g.advance_to(k);
  ClosureResult res;
  auto& raw = const_cast<std::vector<std::uint8_t>&>(g.raw_labels());
  auto put = [&](AgentId p, AgentId q, Round r, Label l) {
    auto& cell = raw[g.index(p, q, r)];
    if (cell == 0) cell = static_cast<std::uint8_t>(l);
  };

  // 1(a) / 2(a)
  for (AgentId p = 1; p <= n; ++p) {
    if (p == self) continue;
    if (peers[p]) res.live |= agent_bit(p);
    put(p, self, k, peers[p] ? Label::Sent : Label::NotSent);
  }
  // own messages; omitted ones first so 1(b) cannot claim them
  for (AgentId q = 1; q <= n; ++q)
    if (q != self && contains(own_omitted, q)) put(self, q, k, Label::NotSent);

  // 1(c) / 2(c): copy Sent and NotSent from peers
  for (AgentId j = 1; j <= n; ++j) {
    const MsgGraph* pg = peers[j];
    if (!pg || j == self) continue;
    const auto& src = pg->raw_labels();
    Round lim = std::min(pg->as_of(), k);
    std::size_t end = static_cast<std::size_t>(lim) * n * n;
    for (std::size_t idx = 0; idx < end && idx < src.size(); ++idx) {
      std::uint8_t in = src[idx];
      if (in != static_cast<std::uint8_t>(Label::Sent) &&
          in != static_cast<std::uint8_t>(Label::NotSent))
        continue;
      std::uint8_t& cell = raw[idx];
      if (cell == 0) {
        cell = in;
      } else if ((cell == static_cast<std::uint8_t>(Label::Sent) ||
                  cell == static_cast<std::uint8_t>(Label::NotSent)) &&
                 cell != in) {
        std::size_t rem = idx;
        AgentId q = static_cast<AgentId>(rem % n) + 1;
        rem /= n;
        AgentId p = static_cast<AgentId>(rem % n) + 1;
        Round r = static_cast<Round>(rem / n) + 1;
        res.conflicts.push_back({{p, q, r}, j, static_cast<Label>(in), static_cast<Label>(cell)});
      }
    }
  }

  // 2(b), forward in rounds
  for (Round r = 2; r <= k; ++r) {
    for (AgentId p = 1; p <= n; ++p) {
      bool missed = false;
      for (AgentId j = 1; j <= n && !missed; ++j)
        if (j != p && g.label(p, j, r - 1) == Label::NotSent) missed = true;
      if (!missed) continue;
      for (AgentId q = 1; q <= n; ++q)
        if (q != p) put(p, q, r, Label::NotSent);
    }
  }

  // 1(b) for anything of ours still open
  for (Round r = 1; r <= k; ++r)
    for (AgentId q = 1; q <= n; ++q)
      if (q != self) put(self, q, r, Label::Sent);

  // 3(a)
  std::vector<std::uint8_t> good;
  std::vector<MessageId> fresh;
  for (;;) {
    compute_good(g, k, good);
    fresh.clear();
    for (Round r = 1; r < k; ++r)
      for (AgentId p = 1; p <= n; ++p) {
        if (!prev_round_known(g, p, r)) continue;
        for (AgentId q = 1; q <= n; ++q) {
          if (q == p) continue;
          if (g.label(p, q, r) == Label::Uncertain && good[g.index(p, q, r)])
            fresh.push_back({p, q, r});
        }
      }
    if (fresh.empty()) break;
    for (const auto& m : fresh) raw[g.index(m.sender, m.receiver, m.round)] =
        static_cast<std::uint8_t>(Label::NeverKnown);
  }
  return res;
}

std::vector<std::vector<MessageId>> message_chains(const MsgGraph& g, const MessageId& m,
                                                   Round k) {
  std::vector<std::vector<MessageId>> out;
  std::vector<MessageId> cur{m};
  auto terminal = [&](const MessageId& x) {
    return x.round == k || g.label(x) != Label::Uncertain;
  };
  std::function<void()> rec = [&]() {
    const MessageId last = cur.back();
    if (terminal(last)) {
      out.push_back(cur);
      return;
    }
    for (AgentId s : {last.sender, last.receiver}) {
      for (AgentId x = 1; x <= g.n(); ++x) {
        if (x == s) continue;
        cur.push_back({s, x, last.round + 1});
        rec();
        cur.pop_back();
      }
      if (last.sender == last.receiver) break;
    }
  };
  rec();
  return out;
}

std::vector<TagConflict> merge_tags(MsgGraph& g,
                                    const std::optional<std::pair<MessageId, Tag>>& direct,
                                    const std::vector<std::pair<MessageId, Tag>>& peer_tags) {
  std::vector<TagConflict> conflicts;
  auto adopt = [&](const MessageId& m, const Tag& t) {
    auto held = g.tag(m);
    if (!held) {
      g.set_tag(m, t);
    } else if (held->wildcard()) {
      if (!t.wildcard()) g.set_tag(m, t);
    } else if (!t.wildcard() && *held->value != *t.value) {
      conflicts.push_back({m, *held, t});
    }
  };
  if (direct) adopt(direct->first, direct->second);
  for (const auto& [m, t] : peer_tags) adopt(m, t);
  return conflicts;
}

MsgGraph outgoing_view(const MsgGraph& g) {
  MsgGraph out = g;
  for (const auto& [m, t] : g.tags())
    if (m.sender == g.owner()) out.clear_tag(m);
  return out;
}

std::vector<std::uint8_t> serialize(const MsgGraph& g) {
  wire::Writer w;
  w.u8(static_cast<std::uint8_t>(g.n()));
  w.u16(static_cast<std::uint16_t>(g.as_of()));
  auto labels = g.labeled();
  w.u16(static_cast<std::uint16_t>(labels.size()));
  for (const auto& [m, l] : labels) {
    w.u16(static_cast<std::uint16_t>(m.round));
    w.u8(static_cast<std::uint8_t>(m.sender));
    w.u8(static_cast<std::uint8_t>(m.receiver));
    w.u8(static_cast<std::uint8_t>(l));
  }
  auto tags = g.tags();
  w.u16(static_cast<std::uint16_t>(tags.size()));
  for (const auto& [m, t] : tags) {
    w.u16(static_cast<std::uint16_t>(m.round));
    w.u8(static_cast<std::uint8_t>(m.sender));
    w.u8(static_cast<std::uint8_t>(m.receiver));
    w.u8(t.wildcard() ? 0 : 1);
    if (!t.wildcard()) w.u64(*t.value);
  }
  return w.take();
}

MsgGraph deserialize_graph(const std::vector<std::uint8_t>& bytes, AgentId owner) {
  wire::Reader rd(bytes);
  int n = rd.u8();
  Round as_of = rd.u16();
  MsgGraph g(n, owner);
  g.advance_to(as_of);
  int nl = rd.u16();
  for (int i = 0; i < nl; ++i) {
    Round r = rd.u16();
    AgentId s = rd.u8();
    AgentId q = rd.u8();
    g.set_label({s, q, r}, static_cast<Label>(rd.u8()));
  }
  int nt = rd.u16();
  for (int i = 0; i < nt; ++i) {
    Round r = rd.u16();
    AgentId s = rd.u8();
    AgentId q = rd.u8();
    bool known = rd.u8() != 0;
    Tag t;
    if (known) t.value = rd.u64();
    g.set_tag({s, q, r}, t);
  }
  return g;
}

}  // namespace rcons
