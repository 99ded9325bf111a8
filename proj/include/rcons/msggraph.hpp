#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcons/core.hpp"

namespace rcons {

enum class Label : std::uint8_t { Uncertain = 0, Sent = 1, NotSent = 2, NeverKnown = 3 };

const char* to_string(Label l);

// A random tag attached to a message. A tag whose value is unknown is a
// wildcard; replays use those where the replaying agent never saw the bits.
struct Tag {
  std::optional<std::uint64_t> value;
  bool wildcard() const { return !value.has_value(); }
  friend bool operator==(const Tag&, const Tag&) = default;
};

class MsgGraph {
 public:
  MsgGraph() = default;
  MsgGraph(int n, AgentId owner);

  int n() const { return n_; }
  AgentId owner() const { return owner_; }
  Round as_of() const { return as_of_; }

  // Extends storage so rounds <= k are addressable; new rounds are Uncertain.
  void advance_to(Round k);

  Label label(AgentId p, AgentId q, Round r) const {
    if (r < 1 || r > as_of_ || p == q) return Label::Uncertain;
    return static_cast<Label>(labels_[index(p, q, r)]);
  }
  Label label(const MessageId& m) const { return label(m.sender, m.receiver, m.round); }
  void set_label(const MessageId& m, Label l);

  bool has_tag(const MessageId& m) const;
  std::optional<Tag> tag(const MessageId& m) const;
  void set_tag(const MessageId& m, Tag t);
  void clear_tag(const MessageId& m);
  bool any_tags() const;

  // Non-Uncertain labels sorted by (round, sender, receiver).
  std::vector<std::pair<MessageId, Label>> labeled() const;
  std::vector<std::pair<MessageId, Tag>> tags() const;
  int count(Label l) const;

  // Raw access for the closure and replay comparison.
  std::size_t index(AgentId p, AgentId q, Round r) const {
    return (static_cast<std::size_t>(r - 1) * n_ + (p - 1)) * n_ + (q - 1);
  }
  const std::vector<std::uint8_t>& raw_labels() const { return labels_; }

  // Labels only (tags ignored); both graphs compared over the longer horizon.
  bool same_labels(const MsgGraph& o) const;
  friend bool operator==(const MsgGraph& a, const MsgGraph& b);

 private:
  struct TagSlot {
    std::uint8_t state = 0;  // 0 none, 1 known, 2 wildcard
    std::uint64_t value = 0;
    friend bool operator==(const TagSlot&, const TagSlot&) = default;
  };

  int n_ = 0;
  AgentId owner_ = 0;
  Round as_of_ = 0;
  std::vector<std::uint8_t> labels_;
  std::vector<TagSlot> tags_;  // empty until the first tag is stored
};

struct LabelConflict {
  MessageId message;
  AgentId source = 0;  // peer whose graph disagreed
  Label incoming = Label::Uncertain;
  Label held = Label::Uncertain;
};

struct TagConflict {
  MessageId message;
  Tag held;
  Tag incoming;
};

struct ClosureResult {
  AgentSet live = 0;
  std::vector<LabelConflict> conflicts;
};

// Runs the labeling rules to a fixpoint for the end of round k. `peers` is
// indexed by sender id (size n+1); a non-null entry means a graph from that
// sender arrived this round. `own_omitted` marks receivers the owner did not
// actually send to in round k (only used by deviating agents).
ClosureResult apply_labeling_closure(MsgGraph& g, const std::vector<const MsgGraph*>& peers,
                                     Round k, AgentSet own_omitted = 0);

// Rule 3(a)(ii) evaluated directly; exposed for tests.
bool chains_all_end_lost(const MsgGraph& g, const MessageId& m, Round k);

// Explicit enumeration of every message chain of m at the end of round k.
std::vector<std::vector<MessageId>> message_chains(const MsgGraph& g, const MessageId& m,
                                                   Round k);

// Adopts the direct tag and peer-carried tags; reports disagreements.
std::vector<TagConflict> merge_tags(MsgGraph& g,
                                    const std::optional<std::pair<MessageId, Tag>>& direct,
                                    const std::vector<std::pair<MessageId, Tag>>& peer_tags);

// Copy with tags removed from every message the owner sent.
MsgGraph outgoing_view(const MsgGraph& g);

std::vector<std::uint8_t> serialize(const MsgGraph& g);
MsgGraph deserialize_graph(const std::vector<std::uint8_t>& bytes, AgentId owner);

}  // namespace rcons
