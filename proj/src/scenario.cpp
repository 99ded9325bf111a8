#include "rcons/scenario.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rcons {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ScenarioError(what); }

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where + " must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail("unknown key in " + where + ": " + k);
}

template <class T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string("bad value for ") + key);
  }
}

AgentSet agent_set(const Json& j, const char* key, int n) {
  if (!j.contains(key)) return 0;
  const auto& a = j.at(key);
  if (!a.is_array()) fail(std::string(key) + " must be a list of agent ids");
  AgentSet s = 0;
  for (const auto& x : a) {
    if (!x.is_number_integer()) fail(std::string(key) + " must be a list of agent ids");
    int id = x.get<int>();
    if (id < 1 || id > n) fail(std::string(key) + ": agent id out of range");
    s |= agent_bit(id);
  }
  return s;
}

Json set_json(AgentSet s) {
  Json a = Json::array();
  for (AgentId id : members(s)) a.push_back(id);
  return a;
}

std::string crash_text(const FailurePattern& f) {
  std::string t = f.to_string();
  auto open = t.find('[');
  return t.substr(open + 1, t.rfind(']') - open - 1);
}

Label parse_label(const std::string& s) {
  for (Label l : {Label::Uncertain, Label::Sent, Label::NotSent, Label::NeverKnown})
    if (s == to_string(l)) return l;
  fail("unknown label: " + s);
}

const char* edit_kind_name(MessageEdit::Kind k) {
  switch (k) {
    case MessageEdit::Kind::Drop: return "drop";
    case MessageEdit::Kind::SetLabel: return "set-label";
    case MessageEdit::Kind::DenyReceipt: return "deny-receipt";
  }
  return "?";
}

MessageEdit::Kind parse_edit_kind(const std::string& s) {
  for (auto k : {MessageEdit::Kind::Drop, MessageEdit::Kind::SetLabel, MessageEdit::Kind::DenyReceipt})
    if (s == edit_kind_name(k)) return k;
  fail("unknown edit kind: " + s);
}

TypeVector parse_types(const Json& j, const ProtocolConfig& cfg) {
  if (j.is_string()) return TypeVector::parse(j.get<std::string>());
  only_keys(j, "types", {"tops", "random_tops"});
  if (j.contains("tops")) return TypeVector::from_tops(get<std::vector<Value>>(j, "tops", {}), cfg.value_count);
  if (j.contains("random_tops")) {
    std::mt19937_64 rng(get<std::uint64_t>(j, "random_tops", 0));
    std::uniform_int_distribution<Value> pick(0, cfg.value_count - 1);
    std::vector<Value> tops(cfg.n);
    for (auto& t : tops) t = pick(rng);
    return TypeVector::from_tops(tops, cfg.value_count);
  }
  fail("types needs a type vector string, tops or random_tops");
}

CheaterPlan parse_plan(const Json& j, const std::string& fallback_name, int n) {
  only_keys(j, "plan", {"name", "kind", "colluders", "cheater", "round", "partial", "trigger_sender",
                        "trigger_round", "source", "peer", "private_channel", "effective_f"});
  CheaterPlan p;
  p.kind = parse_strategy_kind(get<std::string>(j, "kind", "None"));
  p.colluders = agent_set(j, "colluders", n);
  p.params.cheater = get<int>(j, "cheater", 0);
  p.params.round = get<int>(j, "round", 0);
  p.params.partial = agent_set(j, "partial", n);
  p.params.trigger_sender = get<int>(j, "trigger_sender", 0);
  p.params.trigger_round = get<int>(j, "trigger_round", 0);
  p.params.source = get<int>(j, "source", 0);
  p.params.peer = get<int>(j, "peer", 0);
  p.private_channel = get<bool>(j, "private_channel", false);
  if (j.contains("effective_f")) p.effective_f = get<int>(j, "effective_f", 0);
  p.name = get<std::string>(j, "name", fallback_name);
  validate(p, n);
  return p;
}

Json plan_json(const CheaterPlan& p) {
  Json j;
  j["name"] = p.name;
  j["kind"] = to_string(p.kind);
  j["colluders"] = set_json(p.colluders);
  j["cheater"] = p.params.cheater;
  j["round"] = p.params.round;
  if (p.params.partial) j["partial"] = set_json(p.params.partial);
  if (p.params.trigger_sender) {
    j["trigger_sender"] = p.params.trigger_sender;
    j["trigger_round"] = p.params.trigger_round;
  }
  if (p.params.source) j["source"] = p.params.source;
  if (p.params.peer) j["peer"] = p.params.peer;
  if (p.private_channel) j["private_channel"] = true;
  if (p.effective_f) j["effective_f"] = *p.effective_f;
  return j;
}

MessageEdit parse_edit(const Json& j) {
  only_keys(j, "edit", {"kind", "cheater", "round", "peer", "target", "label", "cond_round", "cond_sender"});
  MessageEdit e;
  e.kind = parse_edit_kind(get<std::string>(j, "kind", ""));
  e.cheater = get<int>(j, "cheater", 0);
  e.round = get<int>(j, "round", 0);
  e.peer = get<int>(j, "peer", 0);
  if (j.contains("target")) {
    auto t = get<std::vector<int>>(j, "target", {});
    if (t.size() != 3) fail("target must be [sender, receiver, round]");
    e.target = {t[0], t[1], t[2]};
  }
  if (j.contains("label")) e.label = parse_label(get<std::string>(j, "label", ""));
  e.cond_round = get<int>(j, "cond_round", 0);
  e.cond_sender = get<int>(j, "cond_sender", 0);
  return e;
}

Json edit_json(const MessageEdit& e) {
  Json j;
  j["kind"] = edit_kind_name(e.kind);
  j["cheater"] = e.cheater;
  j["round"] = e.round;
  j["peer"] = e.peer;
  if (e.kind == MessageEdit::Kind::SetLabel) {
    j["target"] = {e.target.sender, e.target.receiver, e.target.round};
    j["label"] = to_string(e.label);
  }
  if (e.cond_round) {
    j["cond_round"] = e.cond_round;
    j["cond_sender"] = e.cond_sender;
  }
  return j;
}

ExploreOptions parse_sweep(const Json& j, const ProtocolConfig& cfg) {
  only_keys(j, "sweep", {"granularity", "crash_round_bound", "budget", "branch_agents", "base", "horizon"});
  ExploreOptions o = default_scope(cfg);
  auto g = get<std::string>(j, "granularity", "fine");
  if (g == "fine") o.granularity = Granularity::Fine;
  else if (g == "coarse") o.granularity = Granularity::Coarse;
  else fail("granularity must be fine or coarse");
  o.crash_round_bound = get<int>(j, "crash_round_bound", o.crash_round_bound);
  o.budget = get<int>(j, "budget", o.budget);
  o.horizon = get<int>(j, "horizon", 0);
  o.branch_agents = agent_set(j, "branch_agents", cfg.n);
  if (j.contains("base")) o.base = parse_pattern(cfg.n, cfg.declared_f, get<std::string>(j, "base", ""));
  if (o.crash_round_bound < 1) fail("crash_round_bound must be >= 1");
  if (o.budget < 0 || o.budget > cfg.declared_f) fail("budget must be in [0, declared_f]");
  return o;
}

Json sweep_json(const ExploreOptions& o) {
  Json j;
  j["granularity"] = o.granularity == Granularity::Fine ? "fine" : "coarse";
  j["crash_round_bound"] = o.crash_round_bound;
  j["budget"] = o.budget;
  if (o.branch_agents) j["branch_agents"] = set_json(o.branch_agents);
  if (o.base.n() > 0 && o.base.crash_count() > 0) j["base"] = crash_text(o.base);
  if (o.horizon) j["horizon"] = o.horizon;
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  only_keys(j, "scenario", {"name", "variant", "n", "declared_f", "value_count", "tag_bits", "seed",
                            "consistency", "types", "pattern", "plan", "edits", "sweep", "flood",
                            "horizon", "out"});
  Scenario s;
  try {
    s.name = get<std::string>(j, "name", "scenario");
    auto& c = s.config;
    c.variant = parse_variant(get<std::string>(j, "variant", "NewEpoch"));
    if (!j.contains("n")) fail("n is required");
    c.n = get<int>(j, "n", 0);
    if (c.n < 3 || c.n > 32) fail("n must be in [3, 32]");
    c.declared_f = get<int>(j, "declared_f", 1);
    c.value_count = get<int>(j, "value_count", 3);
    c.tag_bits = get<int>(j, "tag_bits", 64);
    c.seed = get<std::uint64_t>(j, "seed", 0);
    c.consistency = get<bool>(j, "consistency", true);
    if (!j.contains("types")) fail("types is required");
    s.types = parse_types(j.at("types"), c);
    assemble(c, s.types);  // checks n, f, |V|, tag_bits against the type vector

    auto pat = get<std::string>(j, "pattern", "");
    if (pat != "enumerate") s.pattern = parse_pattern(c.n, c.declared_f, pat);
    s.sweep = j.contains("sweep") ? parse_sweep(j.at("sweep"), c) : default_scope(c);
    s.horizon = get<int>(j, "horizon", 0);
    if (s.horizon < 0) fail("horizon must be >= 0");
    s.out = get<std::string>(j, "out", "");
    if (j.contains("flood")) s.flood = parse_flood_case(get<std::string>(j, "flood", ""));

    if (j.contains("plan") && j.contains("edits")) fail("plan and edits are mutually exclusive");
    if (j.contains("plan")) s.plan = parse_plan(j.at("plan"), s.name, c.n);
    if (j.contains("edits")) {
      const auto& e = j.at("edits");
      only_keys(e, "edits", {"colluders", "list"});
      s.edit_colluders = agent_set(e, "colluders", c.n);
      if (!e.contains("list") || !e.at("list").is_array()) fail("edits.list must be a list");
      for (const auto& x : e.at("list")) s.edits.push_back(parse_edit(x));
      inject(s.edit_colluders, s.edits);  // validation only
    }
    if (s.plan && s.plan->kind != StrategyKind::None) instantiate(*s.plan, c, s.types);
  } catch (const ScenarioError&) {
    throw;
  } catch (const ModelError& e) {
    fail(e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["variant"] = to_string(s.config.variant);
  j["n"] = s.config.n;
  j["declared_f"] = s.config.declared_f;
  j["value_count"] = s.config.value_count;
  j["tag_bits"] = s.config.tag_bits;
  j["seed"] = s.config.seed;
  if (!s.config.consistency) j["consistency"] = false;
  std::string tv = s.types.to_string();
  j["types"] = tv.substr(1, tv.size() - 2);
  j["pattern"] = s.pattern ? crash_text(*s.pattern) : "enumerate";
  if (s.plan) j["plan"] = plan_json(*s.plan);
  if (!s.edits.empty()) {
    Json e;
    e["colluders"] = set_json(s.edit_colluders);
    e["list"] = Json::array();
    for (const auto& x : s.edits) e["list"].push_back(edit_json(x));
    j["edits"] = e;
  }
  j["sweep"] = sweep_json(s.sweep);
  if (s.flood) j["flood"] = std::string(1, static_cast<char>('a' + static_cast<int>(*s.flood)));
  if (s.horizon) j["horizon"] = s.horizon;
  if (!s.out.empty()) j["out"] = s.out;
  return j.dump(2) + "\n";
}

Scenario scenario_from_fixture(const Fixture& fx) {
  Scenario s;
  s.name = fx.name;
  s.config = fx.config;
  s.types = fx.types;
  s.pattern = fx.pattern;
  s.flood = fx.flood;
  if (fx.flood) {
    s.sweep = default_scope(fx.config);
    return s;
  }
  s.plan = fx.plan;
  s.sweep = fx.sweep;
  return s;
}

std::unique_ptr<Strategy> scenario_strategy(const Scenario& s, const ProtocolConfig& cfg,
                                            const TypeVector& types) {
  if (!s.edits.empty()) return inject(s.edit_colluders, s.edits);
  if (s.plan && s.plan->kind != StrategyKind::None) return instantiate(*s.plan, cfg, types);
  return nullptr;
}

int exit_code_for(const ConsensusReport& rep, bool horizon_exhausted) {
  if (rep.punished) return kExitPunished;
  if (horizon_exhausted) return kExitHorizon;
  if (!rep.holds()) return kExitViolated;
  return kExitOk;
}

int worse_exit(int a, int b) {
  auto rank = [](int c) {
    switch (c) {
      case kExitInvalid: return 4;
      case kExitPunished: return 3;
      case kExitHorizon: return 2;
      case kExitViolated: return 1;
      default: return 0;
    }
  };
  return rank(a) >= rank(b) ? a : b;
}

}  // namespace rcons
