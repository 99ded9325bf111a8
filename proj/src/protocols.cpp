#include "rcons/protocols.hpp"

#include "rcons/wire.hpp"

namespace rcons {

namespace {

void put_newepoch(wire::Writer& w, const NewEpochMsg& ne) {
  w.u8(static_cast<std::uint8_t>(ne.part));
  w.u16(static_cast<std::uint16_t>(ne.epoch_sender));
  w.u16(static_cast<std::uint16_t>(ne.round));
  w.u64(ne.bits);
}

}  // namespace

std::vector<std::uint8_t> serialize(const Payload& p) {
  wire::Writer w;
  if (p.graph) {
    w.u8(1);
    w.bytes(serialize(*p.graph));
  } else {
    w.u8(0);
  }
  w.u8(p.newepoch ? 1 : 0);
  if (p.newepoch) put_newepoch(w, *p.newepoch);
  w.u8(p.tag ? 1 : 0);
  if (p.tag) w.u64(*p.tag);
  w.u8(p.note ? 1 : 0);
  if (p.note) {
    const auto& nt = *p.note;
    w.u16(static_cast<std::uint16_t>(nt.from));
    w.u8(static_cast<std::uint8_t>(nt.decision.kind));
    w.u16(static_cast<std::uint16_t>(nt.decision.value + 1));
    w.u16(static_cast<std::uint16_t>(nt.decided_from));
    w.u8(nt.graph ? 1 : 0);
    if (nt.graph) w.bytes(serialize(*nt.graph));
    w.u16(static_cast<std::uint16_t>(nt.newepochs.size()));
    for (const auto& [from, ne] : nt.newepochs) {
      w.u16(static_cast<std::uint16_t>(from));
      put_newepoch(w, ne);
    }
  }
  return w.take();
}

AgentMachine::AgentMachine(const ProtocolConfig& cfg, AgentId id, Value top, bool symbolic)
    : cfg_(cfg),
      id_(id),
      top_(top),
      symbolic_(symbolic),
      graph_(cfg.n, id),
      live_(others(cfg.n, id)),
      dict_(cfg.n) {
  if (id < 1 || id > cfg.n) throw ModelError("agent id out of range");
  if (cfg.tag_bits < 1 || cfg.tag_bits > 64) throw ModelError("tag_bits must be in [1, 64]");
  if (is_randomized(cfg.variant) && !symbolic) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(id)};
    rng_.emplace(seq);
  }
}

Outbox AgentMachine::step_send(Round k) {
  if (terminated_) throw WellFormednessViolation("step_send on a terminated agent");
  if (k != round_ + 1 || sent_this_round_)
    throw WellFormednessViolation("step_send out of turn");
  sent_this_round_ = true;
  Outbox out(static_cast<std::size_t>(cfg_.n) + 1);
  auto view = std::make_shared<const MsgGraph>(outgoing_view(graph_));
  auto ne = phase1_send(dict_, cfg_.variant, id_, top_, cfg_.value_count, k);
  const std::uint64_t mask =
      cfg_.tag_bits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << cfg_.tag_bits) - 1);
  for (AgentId j : members(live_)) {
    Payload p;
    p.graph = view;
    p.newepoch = ne;
    if (is_randomized(cfg_.variant)) {
      MessageId m{id_, j, k};
      if (symbolic_) {
        graph_.set_tag(m, Tag{});
      } else {
        std::uint64_t t = (*rng_)() & mask;
        own_tags_[m] = t;
        graph_.set_tag(m, Tag{t});
        p.tag = t;
      }
    }
    out[j] = std::move(p);
  }
  return out;
}

std::optional<std::uint64_t> AgentMachine::own_tag(const MessageId& m) const {
  auto it = own_tags_.find(m);
  if (it == own_tags_.end()) return std::nullopt;
  return it->second;
}

void AgentMachine::punish(const Verdict& v, Round k) {
  verdict_ = v;
  dict_.decision = Decision::punish();
  dict_.decide_round = k;
  dict_.decided_from = 0;
  terminated_ = true;
  term_round_ = k;
}

void AgentMachine::override_decision(const Decision& d, AgentId from, Round k) {
  dict_.decision = d;
  dict_.decide_round = k;
  dict_.decided_from = from;
}

void AgentMachine::step_recv(const Inbox& in, Round k, AgentSet own_omitted) {
  if (terminated_) throw WellFormednessViolation("step_recv on a terminated agent");
  if (k != round_ + 1 || !sent_this_round_)
    throw WellFormednessViolation("step_recv out of turn");
  if (static_cast<int>(in.size()) != cfg_.n + 1) throw ModelError("inbox must have n+1 slots");
  sent_this_round_ = false;
  round_ = k;

  std::vector<InboxEntry> entries(static_cast<std::size_t>(cfg_.n) + 1);
  std::vector<const MsgGraph*> peers(static_cast<std::size_t>(cfg_.n) + 1, nullptr);
  for (AgentId p = 1; p <= cfg_.n; ++p) {
    if (p == id_ || !in[p]) continue;
    const Payload& pl = *in[p];
    auto g = pl.graph;
    if (!g) g = std::make_shared<const MsgGraph>(cfg_.n, p);  // bare message: no knowledge
    entries[p] = InboxEntry{g, pl.newepoch, pl.tag};
    peers[p] = g.get();
  }
  if (!symbolic_) mhist_.push_back(entries);

  ClosureResult cr = apply_labeling_closure(graph_, peers, k, own_omitted);
  for (AgentId p = 1; p <= cfg_.n; ++p)
    if (entries[p].newepoch) record_newepoch(dict_, p, *entries[p].newepoch, k);

  std::vector<TagConflict> tag_conflicts;
  if (is_randomized(cfg_.variant)) {
    for (AgentId p = 1; p <= cfg_.n; ++p) {
      if (!entries[p].present()) continue;
      std::optional<std::pair<MessageId, Tag>> direct;
      if (entries[p].tag) direct = std::make_pair(MessageId{p, id_, k}, Tag{*entries[p].tag});
      else if (symbolic_) direct = std::make_pair(MessageId{p, id_, k}, Tag{});
      auto c = merge_tags(graph_, direct, entries[p].graph->tags());
      tag_conflicts.insert(tag_conflicts.end(), c.begin(), c.end());
    }
  }

  Phase2Outcome po =
      phase2_update(dict_, cfg_.variant, graph_, cr.live, id_, top_, cfg_.value_count, k);
  live_ = cr.live;
  if (!symbolic_) chains_.push_back(dict_.chain);
  if (po.terminate) {
    terminated_ = true;
    term_round_ = k;
    return;
  }
  if (symbolic_) return;

  if (!cfg_.consistency) {
    // deviating agents never punish; they just stay undecided
    if (po.missing_half) verdict_ = {PunishReason::MissingHalf, k, {}, "missing half"};
    return;
  }
  if (po.missing_half) {
    punish({PunishReason::MissingHalf, k, {}, "decide condition held with a missing half"}, k);
    return;
  }
  if (!cr.conflicts.empty()) {
    const auto& c = cr.conflicts.front();
    punish({PunishReason::LabelConflict, k, c.message,
            std::string("peer ") + std::to_string(c.source) + " says " + to_string(c.incoming) +
                ", held " + to_string(c.held)},
           k);
    return;
  }
  if (!tag_conflicts.empty()) {
    punish({PunishReason::TagConflict, k, tag_conflicts.front().message, "two tags for one message"},
           k);
    return;
  }
  Verdict v = check_consistency(*this, k);
  if (!v.ok()) punish(v, k);
}

std::vector<AgentMachine> assemble(const ProtocolConfig& cfg, const TypeVector& types) {
  if (cfg.n < 3) throw ModelError("need at least 3 agents");
  if (cfg.value_count < 3) throw ModelError("value domain must have at least 3 values");
  if (types.n() != cfg.n) throw ModelError("type vector length must equal n");
  if (types.value_count() != cfg.value_count) throw ModelError("type vector uses a different value domain");
  if (cfg.declared_f < 0 || cfg.declared_f > cfg.n - 1) throw ModelError("declared_f must be in [0, n-1]");
  std::vector<AgentMachine> out;
  out.reserve(static_cast<std::size_t>(cfg.n));
  for (AgentId a = 1; a <= cfg.n; ++a) out.emplace_back(cfg, a, types.top(a));
  return out;
}

}  // namespace rcons
