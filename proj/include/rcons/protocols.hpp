#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "rcons/consistency.hpp"
#include "rcons/core.hpp"
#include "rcons/dictator.hpp"
#include "rcons/msggraph.hpp"

namespace rcons {

class WellFormednessViolation : public ModelError {
 public:
  using ModelError::ModelError;
};

struct ProtocolConfig {
  Variant variant = Variant::NewEpoch;
  int n = 3;
  int declared_f = 1;
  int value_count = 3;
  int tag_bits = 64;
  std::uint64_t seed = 0;
  bool consistency = true;  // false: no checks and no punishment (replays, deviating agents)
};

// Side channel between colluders, carried inside an ordinary round message.
// Honest machines never look at it.
struct CollusionNote {
  AgentId from = 0;
  Decision decision;
  AgentId decided_from = 0;
  std::shared_ptr<const MsgGraph> graph;  // sender's public graph (end of previous round)
  std::vector<std::pair<AgentId, NewEpochMsg>> newepochs;  // NEWEPOCHs the sender holds
};

struct Payload {
  std::shared_ptr<const MsgGraph> graph;  // null for note-only messages
  std::optional<NewEpochMsg> newepoch;
  std::optional<std::uint64_t> tag;
  std::shared_ptr<const CollusionNote> note;
};

std::vector<std::uint8_t> serialize(const Payload& p);

// Indexed by peer id (receiver for an outbox, sender for an inbox); size n+1.
using Outbox = std::vector<std::optional<Payload>>;
using Inbox = std::vector<std::optional<Payload>>;

class AgentMachine {
 public:
  AgentMachine(const ProtocolConfig& cfg, AgentId id, Value top, bool symbolic = false);

  // Phase I of round k = round()+1.
  Outbox step_send(Round k);
  // Phase II of round k. own_omitted lists receivers we skipped on purpose.
  void step_recv(const Inbox& in, Round k, AgentSet own_omitted = 0);

  AgentId id() const { return id_; }
  Value top() const { return top_; }
  const ProtocolConfig& config() const { return cfg_; }
  Round round() const { return round_; }
  bool terminated() const { return terminated_; }
  Round term_round() const { return term_round_; }
  const MsgGraph& graph() const { return graph_; }
  AgentSet live() const { return live_; }
  const DictatorState& dictator() const { return dict_; }
  DictatorState& dictator_mut() { return dict_; }
  const Decision& decision() const { return dict_.decision; }
  Round decide_round() const { return dict_.decide_round; }
  const Verdict& verdict() const { return verdict_; }
  const std::vector<std::vector<InboxEntry>>& mhist() const { return mhist_; }
  std::optional<std::uint64_t> own_tag(const MessageId& m) const;
  bool symbolic() const { return symbolic_; }
  // dictator chain as of the end of each completed round
  const std::vector<std::vector<AgentId>>& chains_by_round() const { return chains_; }

  // Forces a decision; used by deviating agents that decide out of band.
  void override_decision(const Decision& d, AgentId from, Round k);
  void set_consistency(bool on) { cfg_.consistency = on; }

 private:
  void punish(const Verdict& v, Round k);

  ProtocolConfig cfg_;
  AgentId id_ = 0;
  Value top_ = 0;
  bool symbolic_ = false;
  Round round_ = 0;
  bool sent_this_round_ = false;
  bool terminated_ = false;
  Round term_round_ = 0;
  MsgGraph graph_;
  AgentSet live_ = 0;  // live^{round}
  DictatorState dict_;
  Verdict verdict_;
  std::vector<std::vector<InboxEntry>> mhist_;
  std::map<MessageId, std::uint64_t> own_tags_;
  std::optional<std::mt19937_64> rng_;  // real randomized machines only
  std::vector<std::vector<AgentId>> chains_;  // chain at end of each round
};

// n honest machines. Rejects |V| < 3 and n < 3.
std::vector<AgentMachine> assemble(const ProtocolConfig& cfg, const TypeVector& types);

}  // namespace rcons
