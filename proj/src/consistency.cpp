#include "rcons/consistency.hpp"

#include <sstream>
#include <unordered_map>

#include "rcons/protocols.hpp"
#include "rcons/wire.hpp"

namespace rcons {

const char* to_string(PunishReason r) {
  switch (r) {
    case PunishReason::None: return "none";
    case PunishReason::LabelConflict: return "label-conflict";
    case PunishReason::TagConflict: return "tag-conflict";
    case PunishReason::NotAPattern: return "not-a-pattern";
    case PunishReason::TooManyCrashes: return "too-many-crashes";
    case PunishReason::HistoryMismatch: return "history-mismatch";
    case PunishReason::MissingHalf: return "missing-half";
  }
  return "?";
}

std::string Verdict::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os << rcons::to_string(reason) << " round=" << round;
  if (message.round > 0) os << " msg=" << rcons::to_string(message);
  if (!detail.empty()) os << " (" << detail << ')';
  return os.str();
}

PatternCheck reconstruct_pattern(const MsgGraph& g, int declared_f, Round k) {
  PatternCheck out;
  const int n = g.n();
  FailurePattern fp(n, std::min(declared_f, n - 1));
  int crashes = 0;
  for (AgentId p = 1; p <= n; ++p) {
    Round first = 0;
    for (Round r = 1; r <= k && !first; ++r)
      for (AgentId q = 1; q <= n; ++q)
        if (q != p && g.label(p, q, r) == Label::NotSent) {
          first = r;
          break;
        }
    if (!first) continue;
    // nothing of p may survive after its first lost message
    for (Round r = first + 1; r <= k; ++r)
      for (AgentId q = 1; q <= n; ++q)
        if (q != p && g.label(p, q, r) != Label::NotSent) {
          out.invalid = {PunishReason::NotAPattern, k, {p, q, r},
                         "message survives a lost message of round " + std::to_string(r - 1)};
          return out;
        }
    AgentSet delivered = 0;
    for (AgentId q = 1; q <= n; ++q)
      if (q != p && g.label(p, q, first) != Label::NotSent) delivered |= agent_bit(q);
    fp.set_crash(p, CrashSpec{first, delivered});
    ++crashes;
  }
  if (crashes > declared_f) {
    out.invalid = {PunishReason::TooManyCrashes, k, {},
                   std::to_string(crashes) + " crashes observed, f=" + std::to_string(declared_f)};
    return out;
  }
  out.pattern = fp;
  return out;
}

namespace {

struct ReplayState {
  Round r = 0;
  std::vector<AgentMachine> machines;
  // inbox[agent][sender] for round r
  std::vector<std::vector<InboxEntry>> inbox;
  std::shared_ptr<const ReplayState> parent;
};

constexpr std::size_t kCacheCap = 60000;

std::unordered_map<std::string, std::shared_ptr<const ReplayState>>& cache() {
  static thread_local std::unordered_map<std::string, std::shared_ptr<const ReplayState>> c;
  return c;
}

std::string prefix_key(const ProtocolConfig& cfg, const FailurePattern& fp, Round r) {
  wire::Writer w;
  w.u8(static_cast<std::uint8_t>(cfg.variant));
  w.u8(static_cast<std::uint8_t>(cfg.n));
  w.u8(static_cast<std::uint8_t>(cfg.value_count));
  w.u16(static_cast<std::uint16_t>(r));
  for (AgentId a = 1; a <= cfg.n; ++a) {
    const auto& c = fp.crash(a);
    if (!c || c->crash_round > r) continue;
    w.u8(static_cast<std::uint8_t>(a));
    w.u16(static_cast<std::uint16_t>(c->crash_round));
    w.u16(static_cast<std::uint16_t>(c->delivered));
  }
  const auto& d = w.data();
  return std::string(d.begin(), d.end());
}

std::shared_ptr<const ReplayState> state_at(const ProtocolConfig& cfg, const FailurePattern& fp,
                                            Round r) {
  auto& c = cache();
  std::string key = prefix_key(cfg, fp, r);
  if (auto it = c.find(key); it != c.end()) return it->second;

  auto st = std::make_shared<ReplayState>();
  st->r = r;
  const int n = cfg.n;
  if (r == 0) {
    ProtocolConfig sym = cfg;
    sym.consistency = false;
    for (AgentId a = 1; a <= n; ++a) st->machines.emplace_back(sym, a, 0, true);
  } else {
    auto parent = state_at(cfg, fp, r - 1);
    st->parent = parent;
    st->machines = parent->machines;
    st->inbox.assign(static_cast<std::size_t>(n) + 1,
                     std::vector<InboxEntry>(static_cast<std::size_t>(n) + 1));
    std::vector<Inbox> inboxes(static_cast<std::size_t>(n) + 1,
                               Inbox(static_cast<std::size_t>(n) + 1));
    auto active = [&](AgentId a) {
      const auto& cr = fp.crash(a);
      return !(cr && cr->crash_round < r) && !st->machines[a - 1].terminated();
    };
    auto receives = [&](AgentId a) { return active(a) && fp.alive_through(a, r); };
    for (AgentId a = 1; a <= n; ++a) {
      if (!active(a)) continue;
      Outbox ob = st->machines[a - 1].step_send(r);
      for (AgentId j = 1; j <= n; ++j) {
        if (!ob[j] || !fp.is_delivered({a, j, r}) || !receives(j)) continue;
        inboxes[j][a] = ob[j];
        st->inbox[j][a] = InboxEntry{ob[j]->graph, ob[j]->newepoch, ob[j]->tag};
      }
    }
    for (AgentId j = 1; j <= n; ++j)
      if (receives(j)) st->machines[j - 1].step_recv(inboxes[j], r);
  }
  if (c.size() >= kCacheCap) c.clear();
  c.emplace(std::move(key), st);
  return st;
}

std::vector<const ReplayState*> chain_to(const std::shared_ptr<const ReplayState>& last) {
  std::vector<const ReplayState*> out;
  for (const ReplayState* s = last.get(); s && s->r > 0; s = s->parent.get()) out.push_back(s);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<MessageId> tag_keys(const MsgGraph& g) {
  std::vector<MessageId> out;
  for (const auto& [m, t] : g.tags()) out.push_back(m);
  return out;
}

}  // namespace

Verdict replay_and_compare(const AgentMachine& agent, const FailurePattern& fprime, Round k) {
  const ProtocolConfig& cfg = agent.config();
  const AgentId i = agent.id();
  const bool rand = is_randomized(cfg.variant);
  auto last = state_at(cfg, fprime, k);
  auto rounds = chain_to(last);
  const auto& real_hist = agent.mhist();
  auto mismatch = [&](Round r, AgentId p, std::string what) {
    return Verdict{PunishReason::HistoryMismatch, r, {p, i, r}, std::move(what)};
  };
  for (Round r = 1; r <= k; ++r) {
    const auto& sim = rounds[r - 1]->inbox[i];
    const auto& real = real_hist.at(r - 1);
    for (AgentId p = 1; p <= cfg.n; ++p) {
      if (p == i) continue;
      const InboxEntry& a = real[p];
      const InboxEntry& b = sim[p];
      if (a.present() != b.present())
        return mismatch(r, p, a.present() ? "unexpected message" : "expected message missing");
      if (!a.present()) continue;
      if (!a.graph->same_labels(*b.graph)) return mismatch(r, p, "labels differ");
      if (a.newepoch.has_value() != b.newepoch.has_value())
        return mismatch(r, p, "NEWEPOCH presence differs");
      // The simulated bits come from the NEWEPOCHs actually received, so
      // only the structural fields can disagree.
      if (a.newepoch && (a.newepoch->part != b.newepoch->part ||
                         a.newepoch->epoch_sender != b.newepoch->epoch_sender))
        return mismatch(r, p, "NEWEPOCH fields differ");
      if (!rand) continue;
      if (!a.tag) return mismatch(r, p, "direct tag missing");
      if (tag_keys(*a.graph) != tag_keys(*b.graph)) return mismatch(r, p, "tag set differs");
      for (const auto& [m, t] : a.graph->tags()) {
        if (m.sender != i) continue;  // unknown to us: wildcard
        auto mine = agent.own_tag(m);
        if (!mine || t.wildcard() || *t.value != *mine)
          return mismatch(r, p, "tag of " + to_string(m) + " differs");
      }
    }
  }
  return {};
}

Verdict check_consistency(const AgentMachine& agent, Round k) {
  PatternCheck pc = reconstruct_pattern(agent.graph(), agent.config().declared_f, k);
  if (!pc.pattern) return pc.invalid;
  return replay_and_compare(agent, *pc.pattern, k);
}

std::vector<std::vector<InboxEntry>> simulated_history(const ProtocolConfig& cfg,
                                                       const FailurePattern& fprime,
                                                       AgentId agent, Round k) {
  std::vector<std::vector<InboxEntry>> out;
  for (const ReplayState* s : chain_to(state_at(cfg, fprime, k))) out.push_back(s->inbox[agent]);
  return out;
}

void clear_replay_cache() { cache().clear(); }
std::size_t replay_cache_size() { return cache().size(); }

}  // namespace rcons
