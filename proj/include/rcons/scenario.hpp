#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcons/adversary.hpp"
#include "rcons/verify.hpp"

namespace rcons {

// Thrown for anything wrong with a scenario document; maps to exit 64.
class ScenarioError : public ModelError {
 public:
  using ModelError::ModelError;
};

// One scenario file. A pattern is either explicit or "enumerate" (the sweep
// scope); scripted edits and a named plan are mutually exclusive.
struct Scenario {
  std::string name;
  ProtocolConfig config;
  TypeVector types;
  std::optional<FailurePattern> pattern;  // nullopt: enumerate over `sweep`
  std::optional<CheaterPlan> plan;
  AgentSet edit_colluders = 0;
  std::vector<MessageEdit> edits;
  ExploreOptions sweep;
  std::optional<FloodCase> flood;
  Round horizon = 0;
  std::string out;  // empty: caller decides
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

Scenario scenario_from_fixture(const Fixture& fx);

// Strategy for a run, or null for honest runs.
std::unique_ptr<Strategy> scenario_strategy(const Scenario& s, const ProtocolConfig& cfg,
                                            const TypeVector& types);

enum ExitCode : int {
  kExitOk = 0,
  kExitViolated = 2,
  kExitPunished = 3,
  kExitHorizon = 4,
  kExitInvalid = 64,
};

// Punishment first, then horizon exhaustion, then other violations.
int exit_code_for(const ConsensusReport& rep, bool horizon_exhausted);
// Most severe of two codes in the order above.
int worse_exit(int a, int b);

}  // namespace rcons
