#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "rcons/scenario.hpp"

using namespace rcons;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::string out;
  int jobs = 1;
  std::string format = "text";
};

struct Context {
  Scenario sc;
  fs::path out_dir;
  bool structured = false;
};

Context prepare(const Common& c) {
  Context ctx;
  ctx.sc = load_scenario(c.scenario);
  if (c.seed) ctx.sc.config.seed = *c.seed;
  if (c.horizon) {
    if (*c.horizon < 1) throw ScenarioError("--horizon must be >= 1");
    ctx.sc.horizon = *c.horizon;
    ctx.sc.sweep.horizon = *c.horizon;
  }
  if (!c.out.empty()) ctx.out_dir = c.out;
  else if (!ctx.sc.out.empty()) ctx.out_dir = ctx.sc.out;
  else if (const char* env = std::getenv("RCONS_OUT_DIR"); env && *env) ctx.out_dir = env;
  else ctx.out_dir = "rcons-out";
  ctx.structured = c.format == "structured";
  return ctx;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream o(p, std::ios::binary);
  o << text;
  if (!o) throw std::runtime_error("cannot write " + p.string());
}

// Report goes to stdout and to <out>/<name>.<kind>.{txt,json}.
void emit(const Context& ctx, const std::string& kind, const Json& j, const std::string& text) {
  std::string body = ctx.structured ? j.dump(2) + "\n" : text;
  std::cout << body;
  write_file(ctx.out_dir / (ctx.sc.name + "." + kind + (ctx.structured ? ".json" : ".txt")), body);
}

Json consensus_json(const ConsensusReport& r) {
  Json j;
  j["holds"] = r.holds();
  j["termination"] = r.termination;
  j["undecided"] = r.undecided;
  j["uniform_agreement"] = r.uniform_agreement;
  if (r.disagreement) j["disagreement"] = {r.disagreement->first, r.disagreement->second};
  j["validity"] = r.validity;
  if (r.invalid) j["invalid"] = {{"agent", r.invalid->first}, {"decision", r.invalid->second.to_string()}};
  j["punished"] = r.punished;
  return j;
}

Json agents_json(const RunTranscript& t) {
  Json a = Json::array();
  for (const auto& x : t.agents) {
    Json j;
    j["id"] = x.id;
    j["colluder"] = x.colluder;
    j["decision"] = x.decision.to_string();
    j["decide_round"] = x.decide_round;
    j["term_round"] = x.term_round;
    j["crashed"] = x.crashed;
    if (!x.verdict.ok()) j["verdict"] = x.verdict.to_string();
    a.push_back(j);
  }
  return a;
}

std::string hex(std::uint64_t d) {
  std::ostringstream os;
  os << std::hex << d;
  return os.str();
}

int run_flood(const Context& ctx) {
  auto o = run_flood_case(*ctx.sc.flood);
  std::optional<Value> decided, honest;
  bool agree = true;
  for (std::size_t i = 0; i < o.decisions.size(); ++i) {
    if (o.decisions[i].is_value()) {
      if (decided && *decided != o.decisions[i].value) agree = false;
      decided = o.decisions[i].value;
    }
    if (o.honest_decisions[i].is_value()) honest = o.honest_decisions[i].value;
  }
  // agent i proposes i-1, so a changed outcome favours agent value+1
  bool benefit = agree && decided && honest && *decided != *honest;
  std::ostringstream os, dec, hon;
  for (const auto& d : o.decisions) dec << ' ' << (d.decided() ? d.to_string() : "-");
  for (const auto& d : o.honest_decisions) hon << ' ' << (d.decided() ? d.to_string() : "-");
  os << "scenario " << ctx.sc.name << " (min-value flood baseline)\n"
     << "pattern " << o.pattern.to_string() << "\n"
     << "decisions" << dec.str() << "\nhonest" << hon.str() << "\n"
     << "agreement " << (agree ? "holds" : "violated") << "\n"
     << "detected " << (o.detected ? "yes" : "no") << (o.detail.empty() ? "" : ": " + o.detail) << "\n"
     << "benefit " << (benefit ? "flagged: agent " + std::to_string(*decided + 1) + " got its own proposal" : "none")
     << "\n";
  std::string log;
  for (const auto& l : o.log) log += l + "\n";
  write_file(ctx.out_dir / (ctx.sc.name + ".transcript.txt"), log);
  Json j;
  j["scenario"] = ctx.sc.name;
  j["pattern"] = o.pattern.to_string();
  j["decisions"] = dec.str().substr(1);
  j["honest_decisions"] = hon.str().substr(1);
  j["agreement"] = agree;
  j["detected"] = o.detected;
  j["benefit"] = benefit;
  int code = agree ? kExitOk : kExitViolated;
  j["exit"] = code;
  emit(ctx, "report", j, os.str());
  return code;
}

int cmd_run(const Context& ctx) {
  const auto& sc = ctx.sc;
  if (sc.flood) return run_flood(ctx);
  EngineOptions eo;
  eo.horizon = sc.horizon;
  if (sc.pattern) {
    auto t = run(sc.config, sc.types, *sc.pattern, eo, scenario_strategy(sc, sc.config, sc.types));
    auto rep = check_consensus(t, sc.types);
    int code = exit_code_for(rep, t.horizon_exhausted);
    write_file(ctx.out_dir / (sc.name + ".transcript.txt"), t.to_text());
    std::ostringstream os;
    os << "scenario " << sc.name << " " << to_string(sc.config.variant) << " n=" << sc.config.n
       << " f=" << sc.config.declared_f << " seed=" << sc.config.seed << "\n"
       << "pattern " << t.pattern.to_string() << "\ntypes " << t.types.to_string() << "\n";
    if (!t.strategy.empty()) os << "strategy " << t.strategy << "\n";
    for (const auto& a : t.agents) {
      os << "agent " << a.id << (a.colluder ? " (colluder)" : "") << ": "
         << (a.decision.decided() ? a.decision.to_string() : "undecided");
      if (a.decision.decided()) os << " @" << a.decide_round;
      if (a.crashed) os << " crashed@" << a.crash_round;
      if (!a.verdict.ok()) os << " [" << a.verdict.to_string() << "]";
      os << "\n";
    }
    os << "rounds " << t.rounds_run << (t.horizon_exhausted ? " (horizon exhausted)" : "") << "\n"
       << "consensus " << rep.to_string() << "\n"
       << "digest " << hex(t.digest()) << "\nexit " << code << "\n";
    Json j;
    j["scenario"] = sc.name;
    j["variant"] = to_string(sc.config.variant);
    j["seed"] = sc.config.seed;
    j["pattern"] = t.pattern.to_string();
    j["types"] = t.types.to_string();
    j["strategy"] = t.strategy;
    j["agents"] = agents_json(t);
    j["rounds_run"] = t.rounds_run;
    j["horizon_exhausted"] = t.horizon_exhausted;
    j["consensus"] = consensus_json(rep);
    j["digest"] = hex(t.digest());
    j["exit"] = code;
    emit(ctx, "report", j, os.str());
    return code;
  }
  // enumerate the sweep scope
  auto strat = scenario_strategy(sc, sc.config, sc.types);
  ExploreOptions o = sc.sweep;
  if (sc.horizon) o.horizon = sc.horizon;
  int code = kExitOk;
  std::uint64_t failing = 0, punished = 0, exhausted = 0;
  std::optional<std::string> first;
  auto stats = explore(sc.config, sc.types, strat.get(), o, [&](const Engine& e, std::uint64_t mult) {
    auto t = e.transcript();
    auto rep = check_consensus(t, sc.types);
    int c = exit_code_for(rep, t.horizon_exhausted);
    if (c != kExitOk) {
      failing += mult;
      if (!first) first = t.pattern.to_string() + ": " + rep.to_string();
    }
    if (rep.punished) punished += mult;
    if (t.horizon_exhausted) exhausted += mult;
    code = worse_exit(code, c);
    return true;
  });
  std::ostringstream os;
  os << "scenario " << sc.name << " " << to_string(sc.config.variant) << " enumerate ("
     << describe(o, sc.config.n) << ")\n"
     << "patterns " << stats.patterns << " runs " << stats.leaves << "\n"
     << "failing " << failing << " punished " << punished << " horizon_exhausted " << exhausted << "\n";
  if (first) os << "first failure " << *first << "\n";
  os << "exit " << code << "\n";
  Json j;
  j["scenario"] = sc.name;
  j["scope"] = describe(o, sc.config.n);
  j["patterns"] = stats.patterns;
  j["runs"] = stats.leaves;
  j["failing"] = failing;
  j["punished"] = punished;
  j["horizon_exhausted"] = exhausted;
  if (first) j["first_failure"] = *first;
  j["exit"] = code;
  emit(ctx, "report", j, os.str());
  return code;
}

CheaterPlan require_plan(const Scenario& sc) {
  if (!sc.plan || sc.plan->kind == StrategyKind::None)
    throw ScenarioError("scenario has no cheater plan");
  return *sc.plan;
}

int cmd_legality(const Context& ctx, bool prefer_punish) {
  const auto& sc = ctx.sc;
  auto plan = require_plan(sc);
  auto rep = check_legality(sc.config, plan, sc.sweep, prefer_punish);
  int code = kExitOk;
  Json j;
  j["scenario"] = sc.name;
  j["plan"] = plan.to_string();
  j["legal"] = rep.legal;
  j["scope"] = rep.scope;
  j["patterns"] = rep.patterns_checked;
  j["runs"] = rep.runs;
  j["deviating_runs"] = rep.deviating_runs;
  if (rep.counterexample) {
    const auto& ce = *rep.counterexample;
    code = exit_code_for(ce.report, false);
    if (code == kExitOk) code = kExitViolated;
    EngineOptions eo;
    eo.horizon = rep.horizon;
    auto t = run(sc.config, ce.types, ce.pattern, eo, instantiate(plan, sc.config, ce.types));
    write_file(ctx.out_dir / (sc.name + ".counterexample.txt"), t.to_text());
    j["counterexample"] = {{"pattern", ce.pattern.to_string()},
                           {"types", ce.types.to_string()},
                           {"consensus", consensus_json(ce.report)},
                           {"punish_reason", to_string(ce.punish_reason)},
                           {"digest", hex(ce.digest)}};
  }
  j["exit"] = code;
  emit(ctx, "legality", j,
       "scenario " + sc.name + "\nplan " + plan.to_string() + "\n" + rep.to_string() + "\nexit " +
           std::to_string(code) + "\n");
  return code;
}

int cmd_benefit(const Context& ctx) {
  const auto& sc = ctx.sc;
  auto plan = require_plan(sc);
  auto rep = check_benefit(sc.config, plan, sc.sweep);
  Json j;
  j["scenario"] = sc.name;
  j["plan"] = plan.to_string();
  j["beneficial"] = rep.beneficial;
  j["scope"] = rep.scope;
  j["patterns"] = rep.patterns_checked;
  if (rep.witness) {
    const auto& w = *rep.witness;
    j["witness"] = {{"pattern", w.pattern.to_string()},
                    {"types", w.types.to_string()},
                    {"colluder", w.colluder},
                    {"before", w.before.to_string()},
                    {"after", w.after.to_string()},
                    {"honest_decision", w.honest_decision.to_string()},
                    {"cheat_decision", w.cheat_decision.to_string()}};
  }
  j["exit"] = kExitOk;
  emit(ctx, "benefit", j, "scenario " + sc.name + "\nplan " + plan.to_string() + "\n" + rep.to_string() + "\n");
  return kExitOk;
}

int cmd_sweep(const Context& ctx, int c, Round max_round, const std::string& catalog, int jobs) {
  const auto& sc = ctx.sc;
  std::vector<CheaterPlan> family;
  if (catalog == "pretend") family = pretend_crash_catalog(sc.config.n, c, max_round);
  else if (catalog == "all") family = strategy_catalog(sc.config.n, c, max_round);
  else if (sc.plan && sc.plan->kind != StrategyKind::None) family = {*sc.plan};
  else family = strategy_catalog(sc.config.n, c, max_round);

  ResilienceSummary sum;
  sum.variant = sc.config.variant;
  sum.n = sc.config.n;
  sum.c = c;
  sum.f = sc.config.declared_f;
  sum.entries.resize(family.size());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(family.size())));
  // strided split; each slot is written by exactly one worker
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < family.size(); i += jobs)
          sum.entries[i] = resilience_sweep(sc.config, c, {family[i]}, sc.sweep).entries.at(0);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::ostringstream os;
  os << "scenario " << sc.name << " " << to_string(sc.config.variant) << " sweep of "
     << family.size() << " plans (" << describe(sc.sweep, sc.config.n) << ")\n";
  Json plans = Json::array();
  for (const auto& e : sum.entries) {
    os << e.plan.to_string() << ": " << (e.legality.legal ? "legal" : "illegal");
    if (e.benefit) os << (e.benefit->beneficial ? ", beneficial" : ", no benefit");
    if (e.falsifies()) os << "  <- falsifies";
    os << "\n";
    plans.push_back({{"plan", e.plan.to_string()},
                     {"legal", e.legality.legal},
                     {"beneficial", e.benefit && e.benefit->beneficial},
                     {"falsifies", e.falsifies()}});
  }
  os << sum.to_string() << "\n";
  Json j;
  j["scenario"] = sc.name;
  j["plans"] = plans;
  j["falsified"] = sum.falsified();
  j["summary"] = sum.to_string();
  j["exit"] = kExitOk;
  emit(ctx, "sweep", j, os.str());
  return kExitOk;
}

int cmd_dictator(const Context& ctx, int samples) {
  const auto& sc = ctx.sc;
  std::ostringstream os;
  Json j;
  j["scenario"] = sc.name;
  int code = kExitOk;
  if (sc.pattern) {
    auto d = find_dictator(sc.config, *sc.pattern, samples, sc.config.seed + 1);
    os << "pattern " << sc.pattern->to_string() << "\n";
    if (d.dictator) os << "dictator " << *d.dictator << " (" << d.runs << " runs)\n";
    else {
      code = kExitViolated;
      os << "no dictator: " << d.witness->first.to_string() << " vs " << d.witness->second.to_string() << "\n";
    }
    j["pattern"] = sc.pattern->to_string();
    j["dictator"] = d.dictator ? *d.dictator : 0;
    j["runs"] = d.runs;
  } else {
    std::uint64_t total = 0, missing = 0;
    std::map<AgentId, std::uint64_t> by;
    for_each_failure_pattern(sc.config.n, sc.sweep.budget, sc.sweep.crash_round_bound, sc.sweep.granularity,
                             [&](const FailurePattern& fp) {
                               ++total;
                               auto d = find_dictator(sc.config, fp, samples, sc.config.seed + 1);
                               if (d.dictator) ++by[*d.dictator];
                               else ++missing;
                             });
    if (missing) code = kExitViolated;
    os << "patterns " << total << ", without dictator " << missing << "\n";
    Json counts;
    for (auto [a, c] : by) {
      os << "dictator " << a << ": " << c << "\n";
      counts[std::to_string(a)] = c;
    }
    j["patterns"] = total;
    j["missing"] = missing;
    j["by_dictator"] = counts;
  }
  j["exit"] = code;
  emit(ctx, "dictator", j, os.str());
  return code;
}

int cmd_fixtures_export(const std::string& dir) {
  for (const auto& name : fixture_names()) {
    auto p = fs::path(dir) / (name + ".json");
    write_file(p, scenario_to_json(scenario_from_fixture(ce_fixture(name))));
    std::cout << p.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rcons: rational consensus simulator"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "override the scenario seed");
    sub->add_option("--horizon", common.horizon, "override the engine horizon");
    sub->add_option("--out", common.out, "output directory (default: $RCONS_OUT_DIR or ./rcons-out)");
    sub->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", common.format, "report format")->check(CLI::IsMember({"text", "structured"}));
  };

  auto* run_cmd = app.add_subcommand("run", "run a scenario (one pattern or the whole sweep scope)");
  add_common(run_cmd);

  auto* leg_cmd = app.add_subcommand("legality", "bounded legality check of the scenario's plan");
  add_common(leg_cmd);
  bool prefer_punish = false;
  leg_cmd->add_flag("--prefer-punish", prefer_punish, "prefer counterexamples ending in punishment");

  auto* ben_cmd = app.add_subcommand("benefit", "bounded benefit check of the scenario's plan");
  add_common(ben_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "resilience sweep over a plan family");
  add_common(sweep_cmd);
  int colluders = 1;
  Round max_round = 3;
  std::string catalog;
  sweep_cmd->add_option("--colluders", colluders, "max colluder group size")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--max-round", max_round, "last deviating round in catalogs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--catalog", catalog, "plan family (default: the scenario's plan, else all)")
      ->check(CLI::IsMember({"pretend", "all"}));

  auto* dict_cmd = app.add_subcommand("dictator", "find the dictator of a pattern or of every pattern in scope");
  add_common(dict_cmd);
  int samples = 0;
  dict_cmd->add_option("--samples", samples, "random type vectors instead of all (0: all)");

  auto* fx_cmd = app.add_subcommand("fixtures", "built-in fixtures");
  fx_cmd->require_subcommand(1);
  fx_cmd->add_subcommand("list", "list fixture names");
  auto* fx_export = fx_cmd->add_subcommand("export", "write every fixture as a scenario file");
  std::string export_dir = "fixtures";
  fx_export->add_option("--out", export_dir, "target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (fx_cmd->parsed()) {
      if (fx_export->parsed()) return cmd_fixtures_export(export_dir);
      for (const auto& n : fixture_names()) std::cout << n << "\n";
      return kExitOk;
    }
    Context ctx = prepare(common);
    if (run_cmd->parsed()) return cmd_run(ctx);
    if (leg_cmd->parsed()) return cmd_legality(ctx, prefer_punish);
    if (ben_cmd->parsed()) return cmd_benefit(ctx);
    if (sweep_cmd->parsed()) {
      if (ctx.sc.flood) throw ScenarioError("flood baselines have no sweep");
      return cmd_sweep(ctx, colluders, max_round, catalog, common.jobs);
    }
    if (dict_cmd->parsed()) return cmd_dictator(ctx, samples);
  } catch (const ModelError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
