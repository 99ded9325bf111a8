#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcons/adversary.hpp"
#include "rcons/consistency.hpp"
#include "rcons/core.hpp"
#include "rcons/explore.hpp"
#include "rcons/simnet.hpp"

namespace rcons {

struct ConsensusReport {
  bool termination = true;
  std::vector<AgentId> undecided;  // correct agents without a decision
  bool uniform_agreement = true;
  std::optional<std::pair<AgentId, AgentId>> disagreement;
  bool validity = true;
  std::optional<std::pair<AgentId, Decision>> invalid;
  bool punished = false;  // some agent decided the punishment value

  bool holds() const { return termination && uniform_agreement && validity; }
  std::string to_string() const;
};

// Correct agents are those the pattern never crashes within the rounds run.
// Uniform agreement compares value decisions of every agent, crashed or not;
// the punishment value and values nobody proposed fail validity.
ConsensusReport check_consensus(const RunTranscript& t, const TypeVector& types);

Utility agent_utility(const RunTranscript& t, const TypeVector& types, AgentId a);

// Every type vector over |V| values; only tops matter to the protocols, so
// the non-top part of each order is the ascending default.
std::vector<TypeVector> all_top_vectors(int n, int value_count);
// Colluders share one top; everybody else is free.
std::vector<TypeVector> colluder_top_vectors(int n, int value_count, AgentSet colluders);

struct Counterexample {
  FailurePattern pattern;
  TypeVector types;
  ConsensusReport report;
  std::uint64_t digest = 0;  // transcript digest of the replayed run
  PunishReason punish_reason = PunishReason::None;  // first punishing agent's reason
  PunishReason colluder_flag = PunishReason::None;  // e.g. a colluder missed a value half
};

struct LegalityReport {
  bool legal = true;
  std::optional<Counterexample> counterexample;
  std::uint64_t patterns_checked = 0;  // patterns covered (leaf multiplicities)
  std::uint64_t runs = 0;
  std::uint64_t type_vectors = 0;
  std::uint64_t unconfirmed = 0;  // failures predicted by the mapping but not replayed
  std::uint64_t deviating_runs = 0;  // runs where the plan changed what an honest agent got
  Round horizon = 0;
  std::string scope;
  std::string to_string() const;
};

struct BenefitWitness {
  FailurePattern pattern;
  TypeVector types;
  AgentId colluder = 0;
  Utility before;
  Utility after;
  Decision honest_decision;
  Decision cheat_decision;
};

struct BenefitReport {
  bool beneficial = false;
  std::optional<BenefitWitness> witness;
  std::uint64_t patterns_checked = 0;
  std::string scope;
  std::string to_string() const;
};

// Scope used when a plan carries no fixture scope of its own.
ExploreOptions default_scope(const ProtocolConfig& cfg);
// The scope's crash budget, narrowed to the plan's effective_f if set.
ExploreOptions plan_scope(const CheaterPlan& plan, const ExploreOptions& scope);
std::string describe(const ExploreOptions& scope, int n);

// Bounded legality: the deviated profile runs once per explored pattern
// class; runs never look at values except through the decided dictator, so
// each run is evaluated against every type vector of the family by mapping
// the deciding source to its top. The counterexample is replayed with a
// concrete type vector before it is reported.
// prefer_punish keeps searching for a counterexample where someone decides
// the punishment value, falling back to the first failure found.
LegalityReport check_legality(const ProtocolConfig& cfg, const CheaterPlan& plan,
                              const ExploreOptions& scope, bool prefer_punish = false);

// First (pattern, type vector, colluder) where the colluder strictly gains
// over the honest run on the same pattern, full preference orders enumerated
// for the colluders.
BenefitReport check_benefit(const ProtocolConfig& cfg, const CheaterPlan& plan,
                            const ExploreOptions& scope);

struct DictatorReport {
  std::optional<AgentId> dictator;
  // when none: two type vectors whose decisions no single agent explains
  std::optional<std::pair<TypeVector, TypeVector>> witness;
  std::uint64_t runs = 0;
};

// Honest runs under the fixed pattern over every type vector (|V| <= 3) or
// `samples` seeded random ones.
DictatorReport find_dictator(const ProtocolConfig& cfg, const FailurePattern& pattern,
                             int samples = 0, std::uint64_t seed = 1);

// Per-run invariants of the honest protocols (message graphs and dictator
// chains), evaluated up to the first voluntary termination: after that a
// terminated agent looks crashed to its peers without being crashed in F.
enum class RunProperty : std::uint8_t {
  GroundTruth,         // Sent/NotSent agree with the failure pattern
  SingleTransition,    // a non-Uncertain label never changes
  AliveAgreement,      // two live agents never hold different non-Uncertain labels
  NeverKnownExclusive, // NeverKnown somewhere: no live agent ever says Sent/NotSent
  Transfer,            // a receiver learns every status the sender knew a round earlier
  RoundCompleteness,   // all of round k known implies all earlier rounds known
  QuietRounds,         // two crash-free rounds settle the first one's messages
  EventualLearning,    // everything labeled by max(last crash + 2, round + 1)
  NotSentStability,    // once no live agent says NotSent, nobody says it later
  NotSentReceiverAlive,
  ChainStructure,      // each dictator change has a NotSent witness, rounds increasing
  ChainUnique,         // chains start at 1 and never repeat an agent
  ChainPrefix,         // live agents' chains are prefixes of one another
  SingleNewEpoch,      // one NEWEPOCH sender per round
  ChainTransfer,       // a receiver's chain extends the sender's previous chain
  TerminationCascade,  // first termination: every live agent already decided
};
const char* to_string(RunProperty p);
std::vector<RunProperty> all_run_properties();

struct PropertyViolation {
  RunProperty property;
  Round round = 0;
  AgentId agent = 0;
  std::string detail;
};

struct PropertyReport {
  std::vector<PropertyViolation> violations;
  std::vector<std::uint64_t> checked;  // evaluations per property
  Round evaluated_through = 0;
  bool ok() const { return violations.empty(); }
};

PropertyReport check_run_properties(const ProtocolConfig& cfg, const TypeVector& types,
                                    const FailurePattern& pattern, Round horizon = 0);

// Uniform random fine-granularity pattern with at most f crashes in rounds
// 1..max_round.
FailurePattern random_pattern(int n, int f, Round max_round, std::uint64_t seed);
// Agents 1, 2, ... crash in non-decreasing rounds (gaps of 0-2), each with a
// random delivered set; keeps the dictator moving so runs last longer.
FailurePattern random_dictator_pattern(int n, int f, std::uint64_t seed);

struct SweepEntry {
  CheaterPlan plan;
  LegalityReport legality;
  std::optional<BenefitReport> benefit;  // only evaluated for legal plans
  bool falsifies() const { return legality.legal && benefit && benefit->beneficial; }
};

struct ResilienceSummary {
  Variant variant = Variant::NewEpoch;
  int n = 0;
  int c = 0;
  int f = 0;
  std::vector<SweepEntry> entries;
  bool falsified() const;
  // says "not falsified by catalog" unless some plan falsifies
  std::string to_string() const;
};

// Falsification harness over a plan family, never a proof of resilience.
ResilienceSummary resilience_sweep(const ProtocolConfig& cfg, int c,
                                   const std::vector<CheaterPlan>& family,
                                   const ExploreOptions& scope);

}  // namespace rcons
