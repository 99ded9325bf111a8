#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcons {

using AgentId = int;  // 1..n
using Round = int;    // 1-based
using Value = int;    // 0..|V|-1

constexpr Value kNoValue = -1;
constexpr int kMaxAgents = 16;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bitmask over agent ids; bit (id-1) set means member.
using AgentSet = std::uint32_t;

inline AgentSet agent_bit(AgentId a) { return AgentSet{1} << (a - 1); }
inline bool contains(AgentSet s, AgentId a) { return (s & agent_bit(a)) != 0; }
inline AgentSet all_agents(int n) { return (AgentSet{1} << n) - 1; }
inline AgentSet others(int n, AgentId a) { return all_agents(n) & ~agent_bit(a); }
int set_size(AgentSet s);
std::vector<AgentId> members(AgentSet s);
std::string set_to_string(AgentSet s);

struct MessageId {
  AgentId sender = 0;
  AgentId receiver = 0;
  Round round = 0;

  // sort order used everywhere: (round, sender, receiver)
  friend bool operator==(const MessageId&, const MessageId&) = default;
  friend std::strong_ordering operator<=>(const MessageId& a, const MessageId& b) {
    if (auto c = a.round <=> b.round; c != 0) return c;
    if (auto c = a.sender <=> b.sender; c != 0) return c;
    return a.receiver <=> b.receiver;
  }
};

std::string to_string(const MessageId& m);

struct CrashSpec {
  Round crash_round = 0;
  AgentSet delivered = 0;  // receivers still reached in crash_round

  friend bool operator==(const CrashSpec&, const CrashSpec&) = default;
};

class FailurePattern {
 public:
  FailurePattern() = default;
  FailurePattern(int n, int declared_f);

  int n() const { return n_; }
  int declared_f() const { return declared_f_; }
  const std::optional<CrashSpec>& crash(AgentId a) const { return crashes_.at(a - 1); }
  int crash_count() const;
  AgentSet crashed_agents() const;

  // Sets a crash without canonicalizing; use canonicalize() for raw input.
  void set_crash(AgentId a, std::optional<CrashSpec> c);

  bool is_delivered(const MessageId& m) const;
  // True iff agent a completes round r (sends everything and receives).
  bool alive_through(AgentId a, Round r) const;

  std::string to_string() const;

  friend bool operator==(const FailurePattern&, const FailurePattern&) = default;

 private:
  int n_ = 0;
  int declared_f_ = 0;
  std::vector<std::optional<CrashSpec>> crashes_;
};

struct RawCrash {
  AgentId agent = 0;
  Round round = 0;
  AgentSet delivered = 0;
};

// Full delivery in the crash round moves the crash to round+1 with nothing
// delivered. Throws ModelError on malformed input or too many crashes.
FailurePattern canonicalize(int n, int declared_f, const std::vector<RawCrash>& raw);
FailurePattern canonicalize(const FailurePattern& f);

// Text form used by to_string(): "1@2{3,4} 2@4{}" (brackets optional).
FailurePattern parse_pattern(int n, int declared_f, const std::string& text);

enum class Granularity { Coarse, Fine };

void for_each_failure_pattern(int n, int f, Round horizon, Granularity g,
                              const std::function<void(const FailurePattern&)>& fn);
std::vector<FailurePattern> enumerate_failure_patterns(int n, int f, Round horizon,
                                                       Granularity g);
// Closed form for the size of the enumeration above.
std::uint64_t count_failure_patterns(int n, int f, Round horizon, Granularity g);

class PreferenceOrder {
 public:
  PreferenceOrder() = default;
  explicit PreferenceOrder(std::vector<Value> ranking);

  static PreferenceOrder identity(int value_count);
  // top first, remaining values ascending
  static PreferenceOrder with_top(Value top, int value_count);

  Value top() const { return ranking_.front(); }
  int rank(Value v) const;  // 0 = most preferred
  int size() const { return static_cast<int>(ranking_.size()); }
  const std::vector<Value>& ranking() const { return ranking_; }
  bool prefers(Value a, Value b) const { return rank(a) < rank(b); }

  friend bool operator==(const PreferenceOrder&, const PreferenceOrder&) = default;

 private:
  std::vector<Value> ranking_;
};

class TypeVector {
 public:
  TypeVector() = default;
  TypeVector(int n, std::vector<PreferenceOrder> prefs);
  static TypeVector from_tops(const std::vector<Value>& tops, int value_count);

  int n() const { return static_cast<int>(prefs_.size()); }
  const PreferenceOrder& of(AgentId a) const { return prefs_.at(a - 1); }
  Value top(AgentId a) const { return of(a).top(); }
  std::vector<Value> tops() const;
  int value_count() const { return prefs_.empty() ? 0 : prefs_.front().size(); }
  std::string to_string() const;
  // "012 102 ..." one ranking per agent, single-digit values
  static TypeVector parse(const std::string& text);

  friend bool operator==(const TypeVector&, const TypeVector&) = default;

 private:
  std::vector<PreferenceOrder> prefs_;
};

struct Decision {
  enum class Kind : std::uint8_t { Undecided, Value, Punish };
  Kind kind = Kind::Undecided;
  Value value = kNoValue;

  static Decision undecided() { return {}; }
  static Decision of(Value v) { return {Kind::Value, v}; }
  static Decision punish() { return {Kind::Punish, kNoValue}; }

  bool decided() const { return kind != Kind::Undecided; }
  bool is_value() const { return kind == Kind::Value; }
  bool is_punish() const { return kind == Kind::Punish; }
  std::string to_string() const;

  friend bool operator==(const Decision&, const Decision&) = default;
};

// Rank-based utility; NegInf is an explicit sentinel, never a float.
struct Utility {
  enum class Kind : std::uint8_t { NegInf, Finite };
  Kind kind = Kind::Finite;
  int value = 0;

  static Utility neg_inf() { return {Kind::NegInf, 0}; }
  static Utility finite(int v) { return {Kind::Finite, v}; }
  std::string to_string() const;

  friend bool operator==(const Utility&, const Utility&) = default;
  friend std::strong_ordering operator<=>(const Utility& a, const Utility& b) {
    if (a.kind != b.kind) return a.kind == Kind::NegInf ? std::strong_ordering::less
                                                        : std::strong_ordering::greater;
    return a.value <=> b.value;
  }
};

Utility utility(const PreferenceOrder& pref, const Decision& d, bool consensus_holds,
                bool crashed);

}  // namespace rcons
