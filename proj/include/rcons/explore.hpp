#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "rcons/core.hpp"
#include "rcons/simnet.hpp"

namespace rcons {

// Depth-first enumeration of failure patterns that shares run prefixes:
// crash choices are made round by round, only for agents that still send,
// and delivered sets are cut down to the receivers actually addressed. Each
// leaf carries the number of canonical patterns it stands for, so the
// multiplicities of all leaves add up to the size of the pattern space.
struct ExploreOptions {
  Granularity granularity = Granularity::Fine;
  Round crash_round_bound = 1;  // crash rounds 1..bound
  Round horizon = 0;            // engine horizon (0: default)
  int budget = 0;               // max crashes including those in `base`
  AgentSet branch_agents = 0;   // agents whose crashes are enumerated (0: all)
  FailurePattern base;          // fixed crashes of non-branch agents (may be empty)
  bool measure = false;         // engines track message counts and payload sizes
};

struct ExploreStats {
  std::uint64_t leaves = 0;
  std::uint64_t patterns = 0;  // sum of leaf multiplicities
  std::uint64_t nodes = 0;
  bool stopped = false;
};

// visit(engine, multiplicity) returns false to stop early.
using LeafVisitor = std::function<bool(const Engine&, std::uint64_t)>;

ExploreStats explore(const ProtocolConfig& cfg, const TypeVector& types, const Strategy* strategy,
                     const ExploreOptions& opts, const LeafVisitor& visit);

// Patterns the exploration above stands for (closed form).
std::uint64_t explored_pattern_count(int n, const ExploreOptions& opts);

}  // namespace rcons
