#include "rcons/adversary.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "rcons/consistency.hpp"

namespace rcons {

const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::None: return "None";
    case StrategyKind::PretendCrash: return "PretendCrash";
    case StrategyKind::FakeReceipt: return "FakeReceipt";
    case StrategyKind::DropRelay: return "DropRelay";
    case StrategyKind::CE1: return "CE1";
    case StrategyKind::CE2: return "CE2";
    case StrategyKind::CE3: return "CE3";
    case StrategyKind::PrivateChannelCheat: return "PrivateChannelCheat";
  }
  return "?";
}

StrategyKind parse_strategy_kind(const std::string& s) {
  for (auto k : {StrategyKind::None, StrategyKind::PretendCrash, StrategyKind::FakeReceipt,
                 StrategyKind::DropRelay, StrategyKind::CE1, StrategyKind::CE2, StrategyKind::CE3,
                 StrategyKind::PrivateChannelCheat})
    if (s == to_string(k)) return k;
  throw ModelError("unknown strategy: " + s);
}

std::string CheaterPlan::to_string() const {
  std::ostringstream os;
  os << rcons::to_string(kind) << "(colluders=" << set_to_string(colluders);
  const auto& p = params;
  if (p.cheater) os << ",cheater=" << p.cheater;
  if (p.round) os << ",round=" << p.round;
  if (p.partial) os << ",partial=" << set_to_string(p.partial);
  if (p.trigger_sender) os << ",missed=" << p.trigger_sender << "@" << p.trigger_round;
  if (p.source) os << ",source=" << p.source;
  if (p.peer) os << ",peer=" << p.peer;
  if (private_channel) os << ",private";
  if (effective_f) os << ",effective_f=" << *effective_f;
  os << ')';
  return os.str();
}

void validate(const CheaterPlan& plan, int n) {
  const auto& p = plan.params;
  if ((plan.colluders & ~all_agents(n)) != 0) throw ModelError("colluder out of range");
  if (set_size(plan.colluders) > n - 1) throw ModelError("at most n-1 colluders");
  if (plan.effective_f && (*plan.effective_f < 0 || *plan.effective_f > n - 1))
    throw ModelError("effective_f out of range");
  if (plan.kind == StrategyKind::None) return;
  if (!contains(plan.colluders, p.cheater)) throw ModelError("cheater is not a colluder");
  if (p.round < 1) throw ModelError("deviation round must be >= 1");
  const AgentSet honest = all_agents(n) & ~plan.colluders;
  switch (plan.kind) {
    case StrategyKind::PretendCrash:
    case StrategyKind::CE3:
      if ((p.partial & ~honest) != 0) throw ModelError("partial set must be honest agents");
      if (p.trigger_sender && (p.trigger_round < 1 || p.trigger_round >= p.round))
        throw ModelError("trigger must precede the pretended crash");
      break;
    case StrategyKind::FakeReceipt:
    case StrategyKind::CE2:
      if (p.source == p.cheater || !contains(plan.colluders, p.source))
        throw ModelError("faked sender must be another colluder");
      break;
    case StrategyKind::DropRelay:
      if (p.peer < 1 || p.peer > n || !contains(honest, p.peer))
        throw ModelError("dropped receiver must be honest");
      break;
    case StrategyKind::CE1:
      if (n != 5 || plan.colluders != (agent_bit(4) | agent_bit(5)) || p.cheater != 5)
        throw ModelError("CE1 is pinned to n=5, colluders {4,5}, cheater 5");
      break;
    case StrategyKind::PrivateChannelCheat:
      if (!plan.private_channel) throw ModelError("PrivateChannelCheat needs private_channel");
      if (p.source < 1 || p.source > n || p.source == p.cheater)
        throw ModelError("denied sender out of range");
      break;
    case StrategyKind::None: break;
  }
}

namespace {

struct Heard {
  Decision decision;
  AgentId from = 0;
};

class Collusion : public Strategy {
 public:
  Collusion(const CheaterPlan& plan, const ProtocolConfig& cfg, const TypeVector& types)
      : plan_(plan),
        cfg_(cfg),
        n_(cfg.n),
        tops_(static_cast<std::size_t>(cfg.n) + 1, kNoValue),
        pretend_from_(static_cast<std::size_t>(cfg.n) + 1, 0),
        pretenders_seen_(static_cast<std::size_t>(cfg.n) + 1, 0),
        heard_(static_cast<std::size_t>(cfg.n) + 1),
        forced_(static_cast<std::size_t>(cfg.n) + 1, false),
        silent_(static_cast<std::size_t>(cfg.n) + 1, 0),
        audible_(static_cast<std::size_t>(cfg.n) + 1, false),
        fallback_(static_cast<std::size_t>(cfg.n) + 1),
        intent_(static_cast<std::size_t>(cfg.n) + 1) {
    for (AgentId a : members(plan.colluders)) tops_[a] = types.top(a);
    const auto& p = plan.params;
    if ((kind() == StrategyKind::PretendCrash) && p.trigger_sender == 0)
      pretend_from_[p.cheater] = p.round;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(p.cheater), 0x6775u};
    rng_.seed(seq);
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<Collusion>(*this); }
  std::string name() const override { return plan_.to_string(); }
  AgentSet colluders() const override { return plan_.colluders; }
  bool private_channel() const override { return plan_.private_channel; }

  AgentSet edit_sends(AgentId c, const AgentMachine& m, Outbox& out, Round k) override {
    AgentSet acked = 0;
    auto note = make_note(c, m);
    const AgentSet honest = all_agents(n_) & ~plan_.colluders;
    if (pretending(c, k)) {
      for (AgentId j = 1; j <= n_; ++j) {
        if (j == c) continue;
        bool keep = k == pretend_from_[c] && contains(plan_.params.partial & honest, j);
        if (out[j] && !keep) {
          out[j].reset();
          acked |= agent_bit(j);
        }
        if (contains(plan_.colluders, j)) out[j] = Payload{nullptr, std::nullopt, std::nullopt, note};
      }
      return acked;
    }
    for (AgentId j : members(plan_.colluders)) {
      if (j == c) continue;
      if (out[j]) out[j]->note = note;
      else if (contains(pretenders_seen_[c], j))
        out[j] = Payload{nullptr, std::nullopt, std::nullopt, note};
    }
    const auto& p = plan_.params;
    if (kind() == StrategyKind::DropRelay && c == p.cheater && k == p.round && out[p.peer]) {
      out[p.peer].reset();
      acked |= agent_bit(p.peer);
    }
    return acked;
  }

  void edit_inbox(AgentId c, const AgentMachine& m, Inbox& in, Round k,
                  const std::vector<const Inbox*>* peers) override {
    const auto& p = plan_.params;
    if (c != p.cheater || k != p.round) return;
    if ((kind() == StrategyKind::FakeReceipt || kind() == StrategyKind::CE2) && !in[p.source])
      fake_receipt(c, m, in, k);
    if (kind() == StrategyKind::PrivateChannelCheat && in[p.source] && peers) {
      std::size_t idx = 0;
      for (AgentId d : members(plan_.colluders)) {
        const Inbox* other = (*peers)[idx++];
        if (d == c) continue;
        if (!other || (*other)[p.source]) return;  // partner silent, or saw it too
      }
      in[p.source].reset();
    }
  }

  void after_recv(AgentId c, AgentMachine& m, const Inbox& raw, Round k) override {
    audible_[c] = false;
    for (AgentId j : members(plan_.colluders)) {
      if (j == c || !raw[j]) continue;
      audible_[c] = true;
      if (!raw[j]->graph) pretenders_seen_[c] |= agent_bit(j);
      const auto& nt = raw[j]->note;
      if (nt && nt->decision.is_value()) heard_[c] = {nt->decision, nt->decided_from};
    }
    if (pretend_from_[c] == 0 || k <= pretend_from_[c])
      for (AgentId j : members(all_agents(n_) & ~plan_.colluders))
        if (!raw[j]) silent_[c] |= agent_bit(j);  // honest agents still address c
    const auto& p = plan_.params;
    if ((kind() == StrategyKind::PretendCrash || kind() == StrategyKind::CE3) && c == p.cheater &&
        p.trigger_sender && k == p.trigger_round && !raw[p.trigger_sender])
      pretend_from_[c] = p.round;
    if (kind() == StrategyKind::CE1 && c == p.cheater) ce1_step(m, raw, k);
    settle(c, m, k);
  }

 private:
  StrategyKind kind() const { return plan_.kind; }

  bool pretending(AgentId c, Round k) const {
    return pretend_from_[c] != 0 && k >= pretend_from_[c];
  }

  std::shared_ptr<const CollusionNote> make_note(AgentId c, const AgentMachine& m) const {
    auto nt = std::make_shared<CollusionNote>();
    nt->from = c;
    nt->decision = m.decision();
    nt->decided_from = m.dictator().decided_from;
    if (intent_[c].from) {
      nt->decision = intent_[c].decision;
      nt->decided_from = intent_[c].from;
    }
    nt->graph = std::make_shared<const MsgGraph>(m.graph());
    const auto& rec = m.dictator().received;
    for (AgentId s = 1; s < static_cast<AgentId>(rec.size()); ++s)
      for (int part = 0; part < 3; ++part)
        if (rec[s][part])
          nt->newepochs.push_back({s, NewEpochMsg{static_cast<Part>(part), s, rec[s][part]->round,
                                                  rec[s][part]->bits}});
    return nt;
  }

  // Value of agent a as far as colluder machine m knows it.
  std::optional<Value> value_of(const AgentMachine& m, AgentId a) const {
    if (tops_[a] != kNoValue) return tops_[a];
    const auto& rec = m.dictator().received[a];
    if (!is_split(cfg_.variant)) {
      if (rec[0]) return static_cast<Value>(rec[0]->bits);
      return std::nullopt;
    }
    if (rec[1] && rec[2]) return join_halves(rec[1]->bits, rec[2]->bits, cfg_.value_count);
    return std::nullopt;
  }

  bool force(AgentId c, AgentMachine& m, AgentId a, Round k) {
    auto v = value_of(m, a);
    if (!v) return false;
    m.override_decision(Decision::of(*v), a, k);
    forced_[c] = true;
    return true;
  }

  // Decision bookkeeping after the public machine ran round k.
  void settle(AgentId c, AgentMachine& m, Round k) {
    if (m.terminated() || forced_[c]) return;
    const auto& d = m.dictator();
    const bool alone = (all_agents(n_) & ~plan_.colluders & ~silent_[c]) == 0;
    if (pretend_from_[c] != 0 && pretend_from_[c] <= k + 1) {
      // nobody hears a pretender's own epoch once it went silent
      Round ne_done = d.ne_start + (is_split(cfg_.variant) ? 1 : 0);
      if (!alone && d.decision.is_value() && d.decide_round == k && d.decided_from == c &&
          (d.ne_start == 0 || ne_done >= pretend_from_[c]))
        m.override_decision(Decision::undecided(), 0, 0);
      if ((alone || !m.decision().decided()) && heard_[c].from) {
        m.override_decision(heard_[c].decision, heard_[c].from, k);
        forced_[c] = true;
        return;
      }
      if (!alone) return;
      // only colluders left: a partner still talking may know more
      if (d.decision.is_value() && d.decide_round == k && audible_[c]) {
        fallback_[c] = {d.decision, d.decided_from};
        m.override_decision(Decision::undecided(), 0, 0);
      } else if (!d.decision.decided() && !audible_[c] && fallback_[c].from) {
        m.override_decision(fallback_[c].decision, fallback_[c].from, k);
        forced_[c] = true;
      }
      return;
    }
    if (alone && pretenders_seen_[c]) {
      // announce first, commit a round later, so a pretender never misses it
      if (intent_[c].from) {
        m.override_decision(intent_[c].decision, intent_[c].from, k);
        forced_[c] = true;
      } else if (d.decision.is_value() && d.decide_round == k) {
        intent_[c] = {d.decision, d.decided_from};
        m.override_decision(Decision::undecided(), 0, 0);
      }
      return;
    }
    if (!d.decision.decided() && (d.missing_half || d.chain_repeat) && heard_[c].from) {
      m.override_decision(heard_[c].decision, heard_[c].from, k);
      forced_[c] = true;
    }
  }

  std::uint64_t guess() {
    std::uint64_t mask = cfg_.tag_bits == 64 ? ~std::uint64_t{0}
                                             : ((std::uint64_t{1} << cfg_.tag_bits) - 1);
    return rng_() & mask;
  }

  // Replaces a lost message from a colluder by the one an honest run with
  // that message delivered would have produced, rebuilt from the cheater's
  // own view. Only done when every other agent was heard from this round,
  // which pins down what the sender knew.
  void fake_receipt(AgentId c, const AgentMachine& m, Inbox& in, Round k) {
    const AgentId s = plan_.params.source;
    for (AgentId j = 1; j <= n_; ++j)
      if (j != s && j != c && (!in[j] || !in[j]->graph)) return;
    AgentMachine probe = m;
    probe.step_recv(in, k);
    PatternCheck pc = reconstruct_pattern(probe.graph(), cfg_.declared_f, k);
    if (!pc.pattern) return;
    FailurePattern fp = *pc.pattern;
    auto cr = fp.crash(s);
    if (!cr || cr->crash_round != k) return;
    cr->delivered |= agent_bit(c);
    fp.set_crash(s, cr);
    fp = canonicalize(fp);
    auto hist = simulated_history(cfg_, fp, c, k);
    const InboxEntry& e = hist.at(k - 1)[s];
    if (!e.present()) return;
    Payload pl;
    auto g = std::make_shared<MsgGraph>(*e.graph);
    if (is_randomized(cfg_.variant)) {
      for (const auto& [msg, t] : e.graph->tags()) {
        std::optional<std::uint64_t> known;
        if (msg.sender == c) known = m.own_tag(msg);
        else if (auto mine = probe.graph().tag(msg); mine && !mine->wildcard()) known = mine->value;
        g->set_tag(msg, Tag{known ? *known : guess()});
      }
      pl.tag = guess();
    }
    pl.graph = g;
    if (e.newepoch) {
      NewEpochMsg ne = *e.newepoch;
      Value v = tops_[s];
      ne.bits = ne.part == Part::Whole    ? static_cast<std::uint32_t>(v)
                : ne.part == Part::First ? first_half(v, cfg_.value_count)
                                         : second_half(v, cfg_.value_count);
      pl.newepoch = ne;
    }
    in[s] = pl;
  }

  // The five-agent scenario where agent 5 learns late that agent 1's first
  // message to agent 2 was lost, while agent 3 still has it uncertain.
  void ce1_step(AgentMachine& m, const Inbox& raw, Round k) {
    auto graph_of = [&](AgentId j) -> const MsgGraph* {
      if (!raw[j]) return nullptr;
      if (raw[j]->graph) return raw[j]->graph.get();
      return raw[j]->note ? raw[j]->note->graph.get() : nullptr;
    };
    const AgentId c = 5;
    if (k == 3 && !ce1_armed_) {
      const MsgGraph* g3 = raw[3] ? raw[3]->graph.get() : nullptr;
      if (m.graph().label(1, 2, 1) == Label::NotSent && g3 &&
          g3->label(1, 2, 1) == Label::Uncertain) {
        ce1_armed_ = true;
        pretend_from_[c] = 4;
      }
      return;
    }
    if (!ce1_armed_ || forced_[c]) return;
    if (k == 4) {
      const MsgGraph* g3 = raw[3] ? raw[3]->graph.get() : nullptr;
      bool from4 = raw[4] && raw[4]->graph;
      if (!g3) return;
      Label l = g3->label(4, 3, 3);
      if (l == Label::NotSent) force(c, m, 1, k);
      else if (l == Label::Sent && !from4) force(c, m, 3, k);
      else if (l == Label::Sent) ce1_wait_ = true;
      return;
    }
    if (k == 5 && ce1_wait_) {
      const MsgGraph* g4 = graph_of(4);
      if (g4 && g4->label(3, 4, 4) == Label::NotSent) force(c, m, 4, k);
      else force(c, m, 3, k);
    }
  }

  CheaterPlan plan_;
  ProtocolConfig cfg_;
  int n_;
  std::vector<Value> tops_;          // colluders only
  std::vector<Round> pretend_from_;  // per colluder, 0: not pretending
  std::vector<AgentSet> pretenders_seen_;
  std::vector<Heard> heard_;
  std::vector<bool> forced_;
  std::vector<AgentSet> silent_;  // honest agents known crashed
  std::vector<bool> audible_;     // some partner's message arrived this round
  std::vector<Heard> fallback_;
  std::vector<Heard> intent_;
  std::mt19937_64 rng_;
  bool ce1_armed_ = false;
  bool ce1_wait_ = false;
};

}  // namespace

std::unique_ptr<Strategy> instantiate(const CheaterPlan& plan, const ProtocolConfig& cfg,
                                      const TypeVector& types) {
  validate(plan, cfg.n);
  if (types.n() != cfg.n) throw ModelError("type vector size differs from n");
  if (plan.kind == StrategyKind::None && plan.colluders == 0) return nullptr;
  Value t = kNoValue;
  for (AgentId a : members(plan.colluders)) {
    if (t != kNoValue && types.top(a) != t) throw ModelError("colluders must share a top value");
    t = types.top(a);
  }
  return std::make_unique<Collusion>(plan, cfg, types);
}

namespace {

std::vector<AgentSet> colluder_groups(int n, int c) {
  std::vector<AgentSet> out;
  for (AgentSet s = 1; s < (AgentSet{1} << n); ++s)
    if (set_size(s) <= c && set_size(s) <= n - 1) out.push_back(s);
  std::stable_sort(out.begin(), out.end(),
                   [](AgentSet a, AgentSet b) { return set_size(a) < set_size(b); });
  return out;
}

}  // namespace

std::vector<CheaterPlan> pretend_crash_catalog(int n, int c, Round max_round) {
  std::vector<CheaterPlan> out;
  for (AgentSet g : colluder_groups(n, c))
    for (AgentId ch : members(g))
      for (Round r = 1; r <= max_round; ++r) {
        std::vector<AgentSet> partials{0};
        for (AgentId h : members(all_agents(n) & ~g)) partials.push_back(agent_bit(h));
        for (AgentSet part : partials) {
          CheaterPlan p;
          p.kind = StrategyKind::PretendCrash;
          p.colluders = g;
          p.params.cheater = ch;
          p.params.round = r;
          p.params.partial = part;
          p.name = p.to_string();
          out.push_back(p);
        }
      }
  return out;
}

std::vector<CheaterPlan> strategy_catalog(int n, int c, Round max_round) {
  std::vector<CheaterPlan> out = pretend_crash_catalog(n, c, max_round);
  for (AgentSet g : colluder_groups(n, c))
    for (AgentId ch : members(g))
      for (Round r = 1; r <= max_round; ++r) {
        for (AgentId s : members(g & ~agent_bit(ch))) {
          CheaterPlan p;
          p.kind = StrategyKind::FakeReceipt;
          p.colluders = g;
          p.params.cheater = ch;
          p.params.round = r;
          p.params.source = s;
          p.name = p.to_string();
          out.push_back(p);
        }
        for (AgentId h : members(all_agents(n) & ~g)) {
          CheaterPlan p;
          p.kind = StrategyKind::DropRelay;
          p.colluders = g;
          p.params.cheater = ch;
          p.params.round = r;
          p.params.peer = h;
          p.name = p.to_string();
          out.push_back(p);
        }
      }
  return out;
}

std::vector<std::string> fixture_names() {
  return {"Fig1a", "Fig1b", "Fig1c", "Fig1d", "CE1", "CE2", "CE2-Rand", "CE3", "ImpDemo"};
}

namespace {

ProtocolConfig make_config(Variant v, int n, int f) {
  ProtocolConfig c;
  c.variant = v;
  c.n = n;
  c.declared_f = f;
  c.value_count = 3;
  return c;
}

FailurePattern make_pattern(int n, int f, std::vector<std::pair<AgentId, CrashSpec>> crashes) {
  FailurePattern fp(n, f);
  for (auto& [a, c] : crashes) fp.set_crash(a, c);
  return fp;
}

AgentSet set_of(std::initializer_list<AgentId> ids) {
  AgentSet s = 0;
  for (AgentId a : ids) s |= agent_bit(a);
  return s;
}

}  // namespace

Fixture ce_fixture(const std::string& name) {
  Fixture fx;
  fx.name = name;
  if (name.rfind("Fig1", 0) == 0 && name.size() == 5) {
    fx.flood = parse_flood_case(name.substr(4));
    fx.config = make_config(Variant::NewEpoch, 3, 2);
    fx.types = TypeVector::from_tops({0, 1, 2}, 3);
    fx.pattern = run_flood_case(*fx.flood).pattern;
    return fx;
  }
  if (name == "CE1") {
    fx.config = make_config(Variant::NewEpoch, 5, 4);
    fx.pattern = make_pattern(5, 4, {{1, {1, set_of({3, 4, 5})}},
                                     {2, {2, set_of({4})}},
                                     {4, {3, set_of({5})}}});
    fx.types = TypeVector::from_tops({0, 1, 1, 2, 2}, 3);
    fx.plan.kind = StrategyKind::CE1;
    fx.plan.colluders = set_of({4, 5});
    fx.plan.params.cheater = 5;
    fx.plan.params.round = 4;
    fx.sweep.base = make_pattern(5, 4, {{1, {1, set_of({3, 4, 5})}}, {2, {2, set_of({4})}}});
    fx.sweep.branch_agents = set_of({3, 4, 5});
    fx.sweep.budget = 4;
    fx.sweep.crash_round_bound = 2 * 4 + 3;
  } else if (name == "CE2" || name == "CE2-Rand") {
    bool rand = name == "CE2-Rand";
    Round r = rand ? 3 : 2;
    fx.config = make_config(rand ? Variant::RandNewEpoch2 : Variant::NewEpoch2, 4, 2);
    if (rand) fx.config.tag_bits = 16;
    fx.pattern = make_pattern(4, 2, {{1, {r, set_of({3, 4})}}, {2, {r + 2, 0}}});
    fx.types = TypeVector::from_tops({0, 0, 1, 0}, 3);
    fx.plan.kind = StrategyKind::CE2;
    fx.plan.colluders = set_of({1, 2, 4});
    fx.plan.params.cheater = 2;
    fx.plan.params.source = 1;
    fx.plan.params.round = r;
    fx.sweep.base = make_pattern(4, 2, {{1, {r, set_of({3, 4})}}});
    fx.sweep.branch_agents = set_of({2, 3, 4});
    fx.sweep.budget = 2;
    fx.sweep.crash_round_bound = 2 * 2 + 3;
  } else if (name == "CE3") {
    fx.config = make_config(Variant::RandNewEpoch2, 5, 4);
    fx.pattern = make_pattern(5, 4, {{1, {3, set_of({3, 4, 5})}}, {2, {5, set_of({4, 5})}}});
    fx.types = TypeVector::from_tops({1, 0, 2, 0, 0}, 3);
    fx.plan.kind = StrategyKind::CE3;
    fx.plan.colluders = set_of({2, 4, 5});
    fx.plan.params.cheater = 2;
    fx.plan.params.round = 4;
    fx.plan.params.trigger_sender = 1;
    fx.plan.params.trigger_round = 3;
    fx.plan.effective_f = 2;
    fx.sweep.base = make_pattern(5, 4, {{1, {3, set_of({3, 4, 5})}}});
    fx.sweep.branch_agents = set_of({2, 3, 4, 5});
    fx.sweep.budget = 4;
    fx.sweep.crash_round_bound = 2 * 4 + 3;
  } else if (name == "ImpDemo") {
    fx.config = make_config(Variant::NewEpoch2, 4, 2);
    fx.pattern = make_pattern(4, 2, {{1, {1, set_of({2})}}});
    fx.types = TypeVector::from_tops({1, 0, 2, 0}, 3);
    fx.plan.kind = StrategyKind::PrivateChannelCheat;
    fx.plan.colluders = set_of({2, 4});
    fx.plan.private_channel = true;
    fx.plan.params.cheater = 2;
    fx.plan.params.source = 1;
    fx.plan.params.round = 1;
    fx.sweep.budget = 2;
    fx.sweep.crash_round_bound = 2 * 2 + 3;
  } else {
    throw ModelError("unknown fixture: " + name);
  }
  fx.plan.name = name;
  return fx;
}

FloodCase parse_flood_case(const std::string& s) {
  if (s == "a" || s == "A") return FloodCase::A;
  if (s == "b" || s == "B") return FloodCase::B;
  if (s == "c" || s == "C") return FloodCase::C;
  if (s == "d" || s == "D") return FloodCase::D;
  throw ModelError("unknown flooding baseline case: " + s);
}

namespace {

struct FloodScript {
  std::map<AgentId, AgentId> hide_v1;  // manipulator -> receiver left without v_1
  AgentId pretender = 0;               // silent from round 2 on
};

struct FloodRun {
  std::vector<Decision> decisions;
  bool detected = false;
  std::string detail;
  std::vector<std::string> log;
};

// Two flooding rounds among three agents. Cheat rule: leave v_1 out, and if
// agent 1 stays silent in round 2 and the other agent never mentions v_1,
// decide the minimum without it.
FloodRun flood(const FailurePattern& fp, const FloodScript& sc) {
  const int n = 3;
  const Value v1 = 0;
  std::vector<std::set<Value>> known(n + 1);
  for (AgentId i = 1; i <= n; ++i) known[i] = {i - 1};
  // got[r][j][i]: what j received from i in round r
  std::vector<std::vector<std::vector<std::optional<std::set<Value>>>>> got(
      3, std::vector<std::vector<std::optional<std::set<Value>>>>(
             n + 1, std::vector<std::optional<std::set<Value>>>(n + 1)));
  FloodRun out;
  for (Round r = 1; r <= 2; ++r) {
    auto snapshot = known;
    for (AgentId i = 1; i <= n; ++i) {
      const auto& c = fp.crash(i);
      if (c && c->crash_round < r) continue;
      if (sc.pretender == i && r >= 2) continue;
      for (AgentId j = 1; j <= n; ++j) {
        if (j == i || !fp.is_delivered({i, j, r}) || !fp.alive_through(j, r)) continue;
        auto content = snapshot[i];
        auto it = sc.hide_v1.find(i);
        if (r == 2 && it != sc.hide_v1.end() && it->second == j) content.erase(v1);
        got[r][j][i] = content;
        std::ostringstream os;
        os << "round " << r << ": " << i << " -> " << j << " {";
        for (Value v : content) os << ' ' << v;
        os << " }";
        out.log.push_back(os.str());
      }
    }
    for (AgentId j = 1; j <= n; ++j)
      for (AgentId i = 1; i <= n; ++i)
        if (got[r][j][i]) known[j].insert(got[r][j][i]->begin(), got[r][j][i]->end());
  }
  out.decisions.assign(n, Decision::undecided());
  for (AgentId j = 1; j <= n; ++j) {
    if (!fp.alive_through(j, 2)) continue;
    bool cheats = sc.hide_v1.count(j) || sc.pretender == j;
    Value d = *known[j].begin();
    if (cheats && j != 1 && !got[2][j][1]) {
      bool others_lack = true;
      for (AgentId b = 2; b <= n; ++b)
        if (b != j && got[2][j][b] && got[2][j][b]->count(v1)) others_lack = false;
      if (others_lack) {
        auto rest = known[j];
        rest.erase(v1);
        d = *rest.begin();
      }
    }
    out.decisions[j - 1] = Decision::of(d);
  }
  // A round-2 message from a proves a finished round 1, so every agent that
  // also spoke in round 2 had v_a and must have passed it on.
  for (AgentId j = 1; j <= n; ++j) {
    if (sc.hide_v1.count(j) || sc.pretender == j) continue;
    for (AgentId a = 1; a <= n; ++a) {
      if (a == j || !got[2][j][a]) continue;
      for (AgentId b = 1; b <= n; ++b) {
        if (b == j || b == a || !got[2][j][b]) continue;
        if (!got[2][j][b]->count(a - 1)) {
          out.detected = true;
          out.detail = "agent " + std::to_string(j) + " heard agent " + std::to_string(a) +
                       " in round 2 but agent " + std::to_string(b) + " omitted v_" +
                       std::to_string(a);
        }
      }
    }
  }
  return out;
}

}  // namespace

FloodOutcome run_flood_case(FloodCase c) {
  FloodOutcome out;
  FloodScript sc;
  switch (c) {
    case FloodCase::A:
      out.pattern = make_pattern(3, 2, {{1, {1, set_of({2})}}});
      sc.hide_v1 = {{2, 3}};
      break;
    case FloodCase::B:
      out.pattern = make_pattern(3, 2, {{1, {2, set_of({2})}}});
      sc.hide_v1 = {{2, 3}, {3, 2}};
      break;
    case FloodCase::C:
      out.pattern = FailurePattern(3, 2);
      sc.hide_v1 = {{2, 3}};
      break;
    case FloodCase::D:
      out.pattern = make_pattern(3, 2, {{1, {1, set_of({2})}}});
      sc.pretender = 2;
      break;
  }
  FloodRun cheat = flood(out.pattern, sc);
  FloodRun honest = flood(out.pattern, {});
  out.decisions = cheat.decisions;
  out.honest_decisions = honest.decisions;
  out.detected = cheat.detected;
  out.detail = cheat.detail;
  out.log = cheat.log;
  return out;
}

}  // namespace rcons
