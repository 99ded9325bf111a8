#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcons/core.hpp"
#include "rcons/msggraph.hpp"

namespace rcons {

enum class Variant : std::uint8_t { NewEpoch, NewEpoch2, RandNewEpoch2 };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);
inline bool is_split(Variant v) { return v != Variant::NewEpoch; }
inline bool is_randomized(Variant v) { return v == Variant::RandNewEpoch2; }

enum class Part : std::uint8_t { Whole = 0, First = 1, Second = 2 };

struct NewEpochMsg {
  Part part = Part::Whole;
  AgentId epoch_sender = 0;
  Round round = 0;
  std::uint32_t bits = 0;

  friend bool operator==(const NewEpochMsg&, const NewEpochMsg&) = default;
};

// Bit layout of the two-part split: the first part carries the high
// ceil(B/2) bits, the second the low floor(B/2) bits, B = ceil(log2 |V|).
struct SplitLayout {
  int total_bits = 0;
  int hi_bits = 0;
  int lo_bits = 0;
};
SplitLayout split_layout(int value_count);
std::uint32_t first_half(Value v, int value_count);
std::uint32_t second_half(Value v, int value_count);
Value join_halves(std::uint32_t hi, std::uint32_t lo, int value_count);

struct NewEpochRecord {
  Round round = 0;
  std::uint32_t bits = 0;
};

struct DictatorState {
  AgentId dictator = 1;
  std::vector<AgentId> chain{1};
  Round ne_start = 0;  // round of our first NEWEPOCH as dictator
  // received[sender][part]
  std::vector<std::array<std::optional<NewEpochRecord>, 3>> received;
  Decision decision;
  Round decide_round = 0;
  AgentId decided_from = 0;
  bool decide1_disabled = false;  // set by deviating agents only
  bool missing_half = false;
  bool chain_repeat = false;

  explicit DictatorState(int n = 0) : received(static_cast<std::size_t>(n) + 1) {}
};

// Phase I. Returns the NEWEPOCH this agent broadcasts in round k, if any.
std::optional<NewEpochMsg> phase1_send(DictatorState& st, Variant variant, AgentId self,
                                       Value v_self, int value_count, Round k);

void record_newepoch(DictatorState& st, AgentId from, const NewEpochMsg& msg, Round k);

// True once our own NEWEPOCH broadcast is complete as of the end of round k.
bool newepoch_complete(const DictatorState& st, Variant variant, Round k);

struct Phase2Outcome {
  bool terminate = false;     // decided in k-1
  bool decided_now = false;
  bool missing_half = false;  // decide condition held without both halves
};

// Phase II, run after the closure for round k.
Phase2Outcome phase2_update(DictatorState& st, Variant variant, const MsgGraph& g,
                            AgentSet live_k, AgentId self, Value v_self, int value_count,
                            Round k);

// The decide-via-dictator check for the current dictator (no side effects).
struct FollowCheck {
  bool decide = false;
  bool missing_half = false;
  Value value = kNoValue;
};
FollowCheck follow_check(const DictatorState& st, Variant variant, const MsgGraph& g,
                         int value_count, Round k);

// One dictator-change step; returns the new dictator or nullopt.
std::optional<AgentId> change_step(const MsgGraph& g, AgentId dictator);

}  // namespace rcons
