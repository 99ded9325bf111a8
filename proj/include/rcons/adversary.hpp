#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcons/core.hpp"
#include "rcons/explore.hpp"
#include "rcons/simnet.hpp"

namespace rcons {

enum class StrategyKind : std::uint8_t {
  None,
  PretendCrash,
  FakeReceipt,
  DropRelay,
  CE1,
  CE2,  // FakeReceipt with the published placement
  CE3,  // triggered PretendCrash with the published placement
  PrivateChannelCheat,
};

const char* to_string(StrategyKind k);
StrategyKind parse_strategy_kind(const std::string& s);

struct StrategyParams {
  AgentId cheater = 0;
  Round round = 0;           // first deviating round
  AgentSet partial = 0;      // PretendCrash: honest receivers still served in `round`
  AgentId trigger_sender = 0;  // PretendCrash: only if this agent's message was missed...
  Round trigger_round = 0;     // ...in this round (0: unconditional)
  AgentId source = 0;        // FakeReceipt: whose lost message is faked
  AgentId peer = 0;          // DropRelay: honest receiver left out
};

// A colluding group and what it does. Colluders know each other's types
// before the run; at run time they only learn what travels in messages,
// plus the same-round inboxes of the others when private_channel is on.
struct CheaterPlan {
  std::string name;
  AgentSet colluders = 0;
  StrategyKind kind = StrategyKind::None;
  StrategyParams params;
  bool private_channel = false;
  std::optional<int> effective_f;  // crash bound the colluders reason with

  std::string to_string() const;
};

// Throws ModelError for malformed plans (cheater outside the group, group of
// n agents, missing parameters).
void validate(const CheaterPlan& plan, int n);

// Builds the run-time strategy; throws if the colluders' tops differ.
std::unique_ptr<Strategy> instantiate(const CheaterPlan& plan, const ProtocolConfig& cfg,
                                      const TypeVector& types);

// Plans enumerated by resilience sweeps: every colluder group of size <= c
// with PretendCrash, FakeReceipt and DropRelay placements in rounds
// 1..max_round.
std::vector<CheaterPlan> strategy_catalog(int n, int c, Round max_round);
// The PretendCrash part of the catalog only.
std::vector<CheaterPlan> pretend_crash_catalog(int n, int c, Round max_round);

enum class FloodCase : std::uint8_t { A, B, C, D };

// Fully pinned scenario. Flooding-baseline fixtures only set `name`, `flood`
// and the pattern.
struct Fixture {
  std::string name;
  ProtocolConfig config;
  FailurePattern pattern;  // the witness pattern
  TypeVector types;        // a type vector under which the colluders gain
  CheaterPlan plan;
  ExploreOptions sweep;    // bounded legality/benefit scope
  std::optional<FloodCase> flood;
};

std::vector<std::string> fixture_names();
// Fig1a-d, CE1, CE2, CE2-Rand, CE3, ImpDemo. Throws ModelError otherwise.
Fixture ce_fixture(const std::string& name);

// Min-value flooding baseline: three agents flood their known proposals for two
// rounds and decide the minimum; agent i proposes i-1.
struct FloodOutcome {
  FailurePattern pattern;
  std::vector<Decision> decisions;  // index agent-1
  std::vector<Decision> honest_decisions;
  bool detected = false;            // some agent holds proof of a deviation
  std::string detail;
  std::vector<std::string> log;
};

FloodOutcome run_flood_case(FloodCase c);
FloodCase parse_flood_case(const std::string& s);

}  // namespace rcons
