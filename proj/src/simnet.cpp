#include "rcons/simnet.hpp"

#include <iomanip>
#include <sstream>

#include "rcons/wire.hpp"

namespace rcons {

int RunTranscript::actual_crashes() const {
  int c = 0;
  for (const auto& a : agents) c += a.crashed ? 1 : 0;
  return c;
}

std::string RunTranscript::to_text() const {
  std::ostringstream os;
  os << "rcons-transcript v1\n";
  os << "variant " << to_string(config.variant) << " n " << config.n << " f " << config.declared_f
     << " values " << config.value_count << " tag_bits " << config.tag_bits << " seed "
     << config.seed << " prng mt19937_64 horizon " << horizon << '\n';
  os << "types " << types.to_string() << '\n';
  os << "pattern " << pattern.to_string() << '\n';
  os << "strategy " << (strategy.empty() ? "none" : strategy) << '\n';
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    os << "round " << r + 1 << '\n';
    for (const auto& d : rounds[r]) {
      os << "  " << to_string(d.id) << ' ';
      for (auto b : d.bytes) os << std::hex << std::setw(2) << std::setfill('0') << int(b);
      os << std::dec << '\n';
    }
  }
  for (const auto& a : agents) {
    os << "agent " << a.id << " top " << a.top << (a.colluder ? " colluder" : "") << " decision "
       << a.decision.to_string() << " decide_round " << a.decide_round << " from "
       << a.decided_from << " term " << a.term_round << " crashed "
       << (a.crashed ? std::to_string(a.crash_round) : std::string("no")) << " verdict "
       << a.verdict.to_string() << " chain";
    if (!a.chains.empty())
      for (AgentId d : a.chains.back()) os << ' ' << d;
    os << '\n';
  }
  os << "rounds_run " << rounds_run << " horizon_exhausted " << (horizon_exhausted ? 1 : 0)
     << " messages " << message_count << '\n';
  return os.str();
}

std::uint64_t RunTranscript::digest() const {
  std::string t = to_text();
  return wire::fnv1a(std::vector<std::uint8_t>(t.begin(), t.end()));
}

Engine::Engine(const ProtocolConfig& cfg, const TypeVector& types, const FailurePattern& pattern,
               EngineOptions opts, std::unique_ptr<Strategy> strategy)
    : cfg_(cfg),
      types_(types),
      pattern_(pattern),
      opts_(opts),
      strategy_(std::move(strategy)),
      machines_(assemble(cfg, types)) {
  if (pattern.n() != cfg.n) throw ModelError("pattern size differs from n");
  if (pattern.crash_count() > cfg.declared_f) throw ModelError("pattern exceeds declared_f");
  if (opts_.horizon == 0) opts_.horizon = 3 * cfg.declared_f + 6;
  if (opts_.horizon < 1) throw ModelError("horizon must be >= 1");
  outboxes_.assign(static_cast<std::size_t>(cfg.n) + 1, Outbox{});
  acked_.assign(static_cast<std::size_t>(cfg.n) + 1, 0);
  last_active_.assign(static_cast<std::size_t>(cfg.n) + 1, 0);
  if (strategy_) {
    AgentSet c = strategy_->colluders();
    if ((c & ~all_agents(cfg.n)) != 0) throw ModelError("colluder out of range");
    for (AgentId a : members(c)) machines_[a - 1].set_consistency(false);
  }
}

Engine::Engine(const Engine& o)
    : cfg_(o.cfg_),
      types_(o.types_),
      pattern_(o.pattern_),
      opts_(o.opts_),
      strategy_(o.strategy_ ? o.strategy_->clone() : nullptr),
      machines_(o.machines_),
      round_(o.round_),
      prepared_(o.prepared_),
      outboxes_(o.outboxes_),
      acked_(o.acked_),
      deviations_(o.deviations_),
      last_active_(o.last_active_),
      log_(o.log_),
      message_count_(o.message_count_),
      max_payload_(o.max_payload_) {}

Engine& Engine::operator=(const Engine& o) {
  if (this != &o) {
    Engine tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

bool Engine::receives(AgentId a, Round k) const {
  return pattern_.alive_through(a, k) && !machines_[a - 1].terminated();
}

bool Engine::sending(AgentId a) const {
  return prepared_ && outboxes_[a].size() == static_cast<std::size_t>(cfg_.n) + 1;
}

bool Engine::finished() const {
  if (round_ >= opts_.horizon) return true;
  for (AgentId a = 1; a <= cfg_.n; ++a) {
    const auto& c = pattern_.crash(a);
    bool crashed = c && c->crash_round <= round_;
    if (!crashed && !machines_[a - 1].terminated()) return false;
  }
  return true;
}

void Engine::prepare_round() {
  if (prepared_) throw ModelError("round already prepared");
  const Round k = round_ + 1;
  for (AgentId a = 1; a <= cfg_.n; ++a) {
    outboxes_[a].clear();
    acked_[a] = 0;
    const auto& c = pattern_.crash(a);
    if ((c && c->crash_round < k) || machines_[a - 1].terminated()) continue;
    outboxes_[a] = machines_[a - 1].step_send(k);
    if (strategy_ && contains(strategy_->colluders(), a))
      acked_[a] = strategy_->edit_sends(a, machines_[a - 1], outboxes_[a], k);
    last_active_[a] = k;
  }
  prepared_ = true;
}

AgentSet Engine::recipients(AgentId a) const {
  AgentSet s = 0;
  if (!sending(a)) return s;
  for (AgentId j = 1; j <= cfg_.n; ++j)
    if (outboxes_[a][j]) s |= agent_bit(j);
  return s;
}

void Engine::crash_now(AgentId a, AgentSet delivered) {
  if (!prepared_) throw ModelError("crash_now outside a prepared round");
  pattern_.set_crash(a, CrashSpec{round_ + 1, delivered});
}

void Engine::finish_round() {
  if (!prepared_) throw ModelError("finish_round before prepare_round");
  const Round k = round_ + 1;
  const int n = cfg_.n;
  std::vector<Inbox> inboxes(static_cast<std::size_t>(n) + 1, Inbox(static_cast<std::size_t>(n) + 1));
  std::vector<Delivery> delivered;
  for (AgentId a = 1; a <= n; ++a) {
    if (!sending(a)) continue;
    for (AgentId j = 1; j <= n; ++j) {
      const auto& p = outboxes_[a][j];
      if (!p || !pattern_.is_delivered({a, j, k}) || !receives(j, k)) continue;
      inboxes[j][a] = p;
      ++message_count_;
      if (opts_.record || opts_.measure) {
        auto bytes = serialize(*p);
        max_payload_ = std::max(max_payload_, bytes.size());
        if (opts_.record) delivered.push_back({{a, j, k}, std::move(bytes)});
      }
    }
  }
  if (opts_.record) log_.push_back(std::move(delivered));

  const AgentSet coll = strategy_ ? strategy_->colluders() : 0;
  std::vector<const Inbox*> peer_view;
  if (strategy_ && strategy_->private_channel())
    for (AgentId c : members(coll))
      peer_view.push_back(sending(c) && receives(c, k) ? &inboxes[c] : nullptr);

  for (AgentId a : members(coll)) {
    if (!sending(a)) continue;
    for (AgentId j : members(acked_[a] & ~coll))
      if (pattern_.is_delivered({a, j, k}) && receives(j, k)) ++deviations_;
  }

  std::vector<Inbox> raw;
  if (coll) raw = inboxes;
  for (AgentId j = 1; j <= n; ++j) {
    if (!sending(j) || !receives(j, k)) continue;
    if (contains(coll, j)) {
      Inbox pub = inboxes[j];
      for (auto& p : pub)
        if (p && !p->graph) p.reset();  // note-only messages are not protocol messages
      Inbox before = pub;
      strategy_->edit_inbox(j, machines_[j - 1], pub, k,
                            strategy_->private_channel() ? &peer_view : nullptr);
      for (AgentId s = 1; s <= n; ++s)
        if (before[s].has_value() != pub[s].has_value()) ++deviations_;
      machines_[j - 1].step_recv(pub, k, acked_[j]);
    } else {
      machines_[j - 1].step_recv(inboxes[j], k);
    }
  }
  for (AgentId c : members(coll))
    if (sending(c) && receives(c, k)) strategy_->after_recv(c, machines_[c - 1], raw[c], k);

  round_ = k;
  prepared_ = false;
}

void Engine::run() {
  while (!finished()) {
    prepare_round();
    finish_round();
  }
}

RunTranscript Engine::transcript() const {
  RunTranscript t;
  t.config = cfg_;
  t.pattern = pattern_;
  t.types = types_;
  t.strategy = strategy_ ? strategy_->name() : "";
  t.horizon = opts_.horizon;
  t.rounds_run = round_;
  t.rounds = log_;
  t.message_count = message_count_;
  t.max_payload = max_payload_;
  const AgentSet coll = strategy_ ? strategy_->colluders() : 0;
  for (AgentId a = 1; a <= cfg_.n; ++a) {
    const auto& m = machines_[a - 1];
    AgentOutcome o;
    o.id = a;
    o.top = m.top();
    o.colluder = contains(coll, a);
    o.decision = m.decision();
    o.decide_round = m.decide_round();
    o.decided_from = m.dictator().decided_from;
    o.term_round = m.term_round();
    const auto& c = pattern_.crash(a);
    o.crashed = c && c->crash_round <= round_;
    o.crash_round = o.crashed ? c->crash_round : 0;
    o.chains = m.chains_by_round();
    o.verdict = m.verdict();
    if (!o.crashed && !o.decision.decided()) t.horizon_exhausted = true;
    t.agents.push_back(std::move(o));
  }
  return t;
}

RunTranscript run(const ProtocolConfig& cfg, const TypeVector& types,
                  const FailurePattern& pattern, EngineOptions opts,
                  std::unique_ptr<Strategy> strategy) {
  Engine e(cfg, types, pattern, opts, std::move(strategy));
  e.run();
  return e.transcript();
}

namespace {

class ScriptedEdits : public Strategy {
 public:
  ScriptedEdits(AgentSet colluders, std::vector<MessageEdit> edits)
      : colluders_(colluders), edits_(std::move(edits)) {}

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<ScriptedEdits>(*this); }
  std::string name() const override { return "scripted"; }
  AgentSet colluders() const override { return colluders_; }

  AgentSet edit_sends(AgentId c, const AgentMachine&, Outbox& out, Round k) override {
    for (const auto& e : edits_) {
      if (e.cheater != c || e.round != k || !holds(e)) continue;
      if (e.kind == MessageEdit::Kind::Drop) {
        out[e.peer].reset();
      } else if (e.kind == MessageEdit::Kind::SetLabel && out[e.peer] && out[e.peer]->graph) {
        auto g = std::make_shared<MsgGraph>(*out[e.peer]->graph);
        g->set_label(e.target, e.label);
        out[e.peer]->graph = g;
      }
    }
    return 0;  // drops stay invisible to the public machine
  }

  void edit_inbox(AgentId c, const AgentMachine&, Inbox& in, Round k,
                  const std::vector<const Inbox*>*) override {
    for (const auto& e : edits_)
      if (e.cheater == c && e.round == k && e.kind == MessageEdit::Kind::DenyReceipt && holds(e))
        in[e.peer].reset();
  }

  void after_recv(AgentId c, AgentMachine&, const Inbox& raw, Round k) override {
    for (AgentId p = 1; p < static_cast<AgentId>(raw.size()); ++p)
      if (raw[p]) heard_.push_back({p, c, k});
  }

 private:
  bool holds(const MessageEdit& e) const {
    if (e.cond_round == 0) return true;
    for (const auto& h : heard_)
      if (h.receiver == e.cheater && h.sender == e.cond_sender && h.round == e.cond_round) return true;
    return false;
  }

  AgentSet colluders_;
  std::vector<MessageEdit> edits_;
  std::vector<MessageId> heard_;  // messages the cheaters actually got
};

}  // namespace

std::unique_ptr<Strategy> inject(AgentSet colluders, std::vector<MessageEdit> edits) {
  for (const auto& e : edits) {
    if (!contains(colluders, e.cheater)) throw ModelError("edit touches a non-colluder");
    if (e.round < 1) throw ModelError("edit round must be >= 1");
    bool send_side = e.kind != MessageEdit::Kind::DenyReceipt;
    if (e.cond_round != 0 && send_side && e.cond_round >= e.round)
      throw ModelError("edit reads same-round incoming messages before sending");
  }
  return std::make_unique<ScriptedEdits>(colluders, std::move(edits));
}

}  // namespace rcons
