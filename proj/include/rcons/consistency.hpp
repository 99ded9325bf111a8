#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcons/core.hpp"
#include "rcons/dictator.hpp"
#include "rcons/msggraph.hpp"

namespace rcons {

class AgentMachine;
struct ProtocolConfig;

enum class PunishReason : std::uint8_t {
  None,
  LabelConflict,
  TagConflict,
  NotAPattern,    // a send after a missed send
  TooManyCrashes,
  HistoryMismatch,
  MissingHalf,
};

const char* to_string(PunishReason r);

struct Verdict {
  PunishReason reason = PunishReason::None;
  Round round = 0;      // round of the evidence (divergent round for mismatches)
  MessageId message{};  // witness message, when one applies
  std::string detail;

  bool ok() const { return reason == PunishReason::None; }
  std::string to_string() const;
};

// What an agent recorded about one received message (one mhist cell).
struct InboxEntry {
  std::shared_ptr<const MsgGraph> graph;  // null: nothing received
  std::optional<NewEpochMsg> newepoch;
  std::optional<std::uint64_t> tag;  // direct tag, randomized variant only
  bool present() const { return graph != nullptr; }
};

struct PatternCheck {
  std::optional<FailurePattern> pattern;
  Verdict invalid;
};

// F' with (p,q,r) excluded exactly when g labels it NotSent (rounds <= k).
PatternCheck reconstruct_pattern(const MsgGraph& g, int declared_f, Round k);

// Replays the honest protocol (no consistency component) under F' and
// compares the agent's simulated history with its real one.
Verdict replay_and_compare(const AgentMachine& agent, const FailurePattern& fprime, Round k);

// Full check: pattern reconstruction followed by the replay.
Verdict check_consistency(const AgentMachine& agent, Round k);

// Simulated history of one agent under a pattern, rounds 1..k (index r-1,
// then sender). Exposed for tests.
std::vector<std::vector<InboxEntry>> simulated_history(const ProtocolConfig& cfg,
                                                       const FailurePattern& fprime,
                                                       AgentId agent, Round k);

void clear_replay_cache();
std::size_t replay_cache_size();

}  // namespace rcons
