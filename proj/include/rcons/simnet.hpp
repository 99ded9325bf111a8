#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rcons/core.hpp"
#include "rcons/protocols.hpp"

namespace rcons {

// A colluding group's deviation, driven by the engine once per round.
// Hooks for colluder c only ever receive c's own machine and messages; the
// other colluders' same-round inboxes are passed only when the plan uses a
// private channel (null for colluders not receiving in that round).
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::unique_ptr<Strategy> clone() const = 0;
  virtual std::string name() const = 0;
  virtual AgentSet colluders() const = 0;
  virtual bool private_channel() const { return false; }

  // Edits c's round-k sends (before the failure pattern is applied). Returns
  // receivers whose omission c's public machine should record as NotSent.
  virtual AgentSet edit_sends(AgentId c, const AgentMachine& m, Outbox& out, Round k) = 0;
  // Edits what c's public machine sees in round k.
  virtual void edit_inbox(AgentId c, const AgentMachine& m, Inbox& in, Round k,
                          const std::vector<const Inbox*>* colluder_inboxes) = 0;
  // Runs after c's public machine processed round k; may override decisions.
  virtual void after_recv(AgentId c, AgentMachine& m, const Inbox& raw_in, Round k) = 0;
};

struct Delivery {
  MessageId id;
  std::vector<std::uint8_t> bytes;
};

struct AgentOutcome {
  AgentId id = 0;
  Value top = 0;
  bool colluder = false;
  Decision decision;
  Round decide_round = 0;
  AgentId decided_from = 0;
  Round term_round = 0;
  bool crashed = false;  // per the ground-truth pattern, within the rounds run
  Round crash_round = 0;
  std::vector<std::vector<AgentId>> chains;  // dictator chain per completed round
  Verdict verdict;
};

struct RunTranscript {
  ProtocolConfig config;
  FailurePattern pattern;
  TypeVector types;
  std::string strategy;  // empty for honest runs
  Round horizon = 0;
  Round rounds_run = 0;
  bool horizon_exhausted = false;
  std::vector<std::vector<Delivery>> rounds;  // only when recording
  std::vector<AgentOutcome> agents;
  std::size_t message_count = 0;
  std::size_t max_payload = 0;  // bytes; only when recording or measuring

  int actual_crashes() const;
  std::string to_text() const;
  std::uint64_t digest() const;
};

struct EngineOptions {
  Round horizon = 0;      // 0: 3*declared_f + 6
  bool record = true;     // keep payload bytes per delivery
  bool measure = false;   // compute payload sizes without keeping bytes
};

class Engine {
 public:
  Engine(const ProtocolConfig& cfg, const TypeVector& types, const FailurePattern& pattern,
         EngineOptions opts = {}, std::unique_ptr<Strategy> strategy = nullptr);
  Engine(const Engine& o);
  Engine& operator=(const Engine& o);
  Engine(Engine&&) = default;
  Engine& operator=(Engine&&) = default;

  Round round() const { return round_; }
  Round horizon() const { return opts_.horizon; }
  bool finished() const;

  // Phase I of the next round for every active agent, cheater edits applied.
  void prepare_round();
  // Actual recipients of a's prepared round messages.
  AgentSet recipients(AgentId a) const;
  const Outbox& outbox(AgentId a) const { return outboxes_.at(a); }
  bool sending(AgentId a) const;  // a is active in the prepared round
  // Adds a crash of `a` in the prepared round (used by explorers).
  void crash_now(AgentId a, AgentSet delivered);
  // Delivery, inbox edits and Phase II for the prepared round.
  void finish_round();
  void run();

  const std::vector<AgentMachine>& machines() const { return machines_; }
  const FailurePattern& pattern() const { return pattern_; }
  const Strategy* strategy() const { return strategy_.get(); }
  RunTranscript transcript() const;
  // Last round in which agent a sent (0 if never).
  Round last_active(AgentId a) const { return last_active_.at(a); }
  // withheld messages an honest receiver would have got, plus inbox edits
  std::uint64_t deviations() const { return deviations_; }
  std::size_t message_count() const { return message_count_; }
  std::size_t max_payload() const { return max_payload_; }

 private:
  bool receives(AgentId a, Round k) const;

  ProtocolConfig cfg_;
  TypeVector types_;
  FailurePattern pattern_;
  EngineOptions opts_;
  std::unique_ptr<Strategy> strategy_;
  std::vector<AgentMachine> machines_;
  Round round_ = 0;
  bool prepared_ = false;
  std::vector<Outbox> outboxes_;
  std::vector<AgentSet> acked_;
  std::uint64_t deviations_ = 0;
  std::vector<Round> last_active_;
  std::vector<std::vector<Delivery>> log_;
  std::size_t message_count_ = 0;
  std::size_t max_payload_ = 0;
};

// Convenience: build and run to completion.
RunTranscript run(const ProtocolConfig& cfg, const TypeVector& types,
                  const FailurePattern& pattern, EngineOptions opts = {},
                  std::unique_ptr<Strategy> strategy = nullptr);

// Scripted edits for scenario files.
struct MessageEdit {
  enum class Kind : std::uint8_t { Drop, SetLabel, DenyReceipt };
  Kind kind = Kind::Drop;
  AgentId cheater = 0;
  Round round = 0;
  AgentId peer = 0;           // receiver for Drop/SetLabel, sender for DenyReceipt
  MessageId target{};         // SetLabel only
  Label label = Label::Sent;  // SetLabel only
  // Optional precondition: cheater received a message from cond_sender in
  // cond_round. A precondition on the edit's own round is rejected.
  Round cond_round = 0;
  AgentId cond_sender = 0;
};

// Wraps a list of scripted edits as a strategy; validates the edits.
std::unique_ptr<Strategy> inject(AgentSet colluders, std::vector<MessageEdit> edits);

}  // namespace rcons
