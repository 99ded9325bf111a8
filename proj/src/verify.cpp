#include "rcons/verify.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace rcons {

std::string ConsensusReport::to_string() const {
  std::ostringstream os;
  os << "termination " << (termination ? "pass" : "FAIL");
  if (!undecided.empty()) {
    os << " (undecided:";
    for (AgentId a : undecided) os << ' ' << a;
    os << ')';
  }
  os << ", uniform agreement " << (uniform_agreement ? "pass" : "FAIL");
  if (disagreement) os << " (agents " << disagreement->first << " and " << disagreement->second << ')';
  os << ", validity " << (validity ? "pass" : "FAIL");
  if (invalid) os << " (agent " << invalid->first << " decided " << invalid->second.to_string() << ')';
  return os.str();
}

ConsensusReport check_consensus(const RunTranscript& t, const TypeVector& types) {
  ConsensusReport r;
  const auto tops = types.tops();
  std::optional<std::pair<AgentId, Value>> first;
  for (const auto& a : t.agents) {
    if (!a.crashed && !a.decision.decided()) {
      r.termination = false;
      r.undecided.push_back(a.id);
    }
    if (a.decision.is_punish()) {
      r.punished = true;
      if (r.validity) r.invalid = {a.id, a.decision};
      r.validity = false;
    }
    if (!a.decision.is_value()) continue;
    if (std::find(tops.begin(), tops.end(), a.decision.value) == tops.end()) {
      if (r.validity) r.invalid = {a.id, a.decision};
      r.validity = false;
    }
    if (!first) {
      first = {a.id, a.decision.value};
    } else if (a.decision.value != first->second && r.uniform_agreement) {
      r.uniform_agreement = false;
      r.disagreement = {first->first, a.id};
    }
  }
  return r;
}

Utility agent_utility(const RunTranscript& t, const TypeVector& types, AgentId a) {
  const auto& o = t.agents.at(a - 1);
  return utility(types.of(a), o.decision, check_consensus(t, types).holds(), o.crashed);
}

std::vector<TypeVector> all_top_vectors(int n, int value_count) {
  std::vector<TypeVector> out;
  std::vector<Value> tops(n, 0);
  for (;;) {
    out.push_back(TypeVector::from_tops(tops, value_count));
    int i = n - 1;
    while (i >= 0 && tops[i] == value_count - 1) tops[i--] = 0;
    if (i < 0) break;
    ++tops[i];
  }
  return out;
}

std::vector<TypeVector> colluder_top_vectors(int n, int value_count, AgentSet colluders) {
  std::vector<TypeVector> out;
  for (const auto& tv : all_top_vectors(n, value_count)) {
    bool same = true;
    Value t = kNoValue;
    for (AgentId a : members(colluders)) {
      if (t != kNoValue && tv.top(a) != t) same = false;
      t = tv.top(a);
    }
    if (same) out.push_back(tv);
  }
  return out;
}

ExploreOptions default_scope(const ProtocolConfig& cfg) {
  ExploreOptions o;
  o.crash_round_bound = 2 * cfg.declared_f + 3;
  o.budget = cfg.declared_f;
  return o;
}

ExploreOptions plan_scope(const CheaterPlan& plan, const ExploreOptions& scope) {
  ExploreOptions o = scope;
  if (plan.effective_f) o.budget = std::min(o.budget, *plan.effective_f);
  return o;
}

std::string describe(const ExploreOptions& s, int n) {
  std::ostringstream os;
  os << (s.granularity == Granularity::Fine ? "fine" : "coarse") << " patterns, crash rounds <= "
     << s.crash_round_bound << ", crashes <= " << s.budget << ", horizon "
     << (s.horizon ? std::to_string(s.horizon) : std::string("3f+6"));
  AgentSet br = s.branch_agents ? s.branch_agents : all_agents(n);
  if (br != all_agents(n)) os << ", crashing agents " << set_to_string(br);
  if (s.base.n() == n && s.base.crash_count() > 0) os << ", fixed " << s.base.to_string();
  return os.str();
}

std::string LegalityReport::to_string() const {
  std::ostringstream os;
  if (legal) {
    os << "legal within bounds (" << scope << "; " << patterns_checked << " patterns, " << runs
       << " runs, " << type_vectors << " type vectors";
    if (unconfirmed) os << ", " << unconfirmed << " unconfirmed";
    os << ')';
  } else {
    os << "illegal: pattern " << counterexample->pattern.to_string() << ", types "
       << counterexample->types.to_string() << ": " << counterexample->report.to_string();
    if (counterexample->punish_reason != PunishReason::None)
      os << " [" << rcons::to_string(counterexample->punish_reason) << ']';
    if (counterexample->colluder_flag != PunishReason::None)
      os << " [colluder: " << rcons::to_string(counterexample->colluder_flag) << ']';
  }
  return os.str();
}

std::string BenefitReport::to_string() const {
  std::ostringstream os;
  if (!beneficial) {
    os << "no benefit found (" << scope << "; " << patterns_checked << " patterns)";
    return os.str();
  }
  const auto& w = *witness;
  os << "beneficial: colluder " << w.colluder << " utility " << w.before.to_string() << " -> "
     << w.after.to_string() << " (decision " << w.honest_decision.to_string() << " -> "
     << w.cheat_decision.to_string() << ") under pattern " << w.pattern.to_string() << ", types "
     << w.types.to_string();
  return os.str();
}

namespace {

// A finished run reduced to what the type vector can change.
struct Skeleton {
  bool punished = false;
  bool undecided_correct = false;
  std::vector<bool> crashed;     // index agent-1
  std::vector<AgentId> source;   // 0: no value decision
  bool sources_known = true;     // every value decision names its source
};

Skeleton skeleton(const Engine& e, const TypeVector& probe) {
  Skeleton s;
  const int n = static_cast<int>(e.machines().size());
  s.crashed.assign(n, false);
  s.source.assign(n, 0);
  for (AgentId a = 1; a <= n; ++a) {
    const auto& m = e.machines()[a - 1];
    const auto& c = e.pattern().crash(a);
    s.crashed[a - 1] = c && c->crash_round <= e.round();
    const Decision& d = m.decision();
    if (d.is_punish()) s.punished = true;
    if (!s.crashed[a - 1] && !d.decided()) s.undecided_correct = true;
    if (d.is_value()) {
      AgentId src = m.dictator().decided_from;
      if (src < 1 || src > n || probe.top(src) != d.value) s.sources_known = false;
      s.source[a - 1] = src;
    }
  }
  return s;
}

bool consensus_under(const Skeleton& s, const TypeVector& tv) {
  if (s.punished || s.undecided_correct || !s.sources_known) return false;
  Value v = kNoValue;
  for (AgentId src : s.source) {
    if (!src) continue;
    if (v != kNoValue && tv.top(src) != v) return false;
    v = tv.top(src);
  }
  return true;
}

TypeVector probe_vector(int n, int value_count, AgentSet colluders) {
  std::vector<Value> tops(n);
  int next = 1;
  for (AgentId a = 1; a <= n; ++a) {
    if (contains(colluders, a)) tops[a - 1] = 0;
    else tops[a - 1] = (next++ % (value_count - 1)) + 1;
  }
  if (colluders == 0) tops[0] = 0;
  return TypeVector::from_tops(tops, value_count);
}

std::unique_ptr<Strategy> strategy_for(const CheaterPlan& plan, const ProtocolConfig& cfg,
                                       const TypeVector& tv) {
  if (plan.kind == StrategyKind::None && plan.colluders == 0) return nullptr;
  return instantiate(plan, cfg, tv);
}

RunTranscript replay(const ProtocolConfig& cfg, const CheaterPlan* plan, const TypeVector& tv,
                     const FailurePattern& fp, Round horizon) {
  EngineOptions eo;
  eo.horizon = horizon;
  return run(cfg, tv, fp, eo, plan ? strategy_for(*plan, cfg, tv) : nullptr);
}

}  // namespace

LegalityReport check_legality(const ProtocolConfig& cfg, const CheaterPlan& plan,
                              const ExploreOptions& scope_in, bool prefer_punish) {
  validate(plan, cfg.n);
  const ExploreOptions scope = plan_scope(plan, scope_in);
  LegalityReport rep;
  rep.scope = describe(scope, cfg.n);
  const auto family = colluder_top_vectors(cfg.n, cfg.value_count, plan.colluders);
  rep.type_vectors = family.size();
  const TypeVector probe = probe_vector(cfg.n, cfg.value_count, plan.colluders);
  auto strat = strategy_for(plan, cfg, probe);
  ExploreStats st = explore(cfg, probe, strat.get(), scope, [&](const Engine& e, std::uint64_t) {
    rep.horizon = e.horizon();
    if (e.deviations()) ++rep.deviating_runs;
    Skeleton sk = skeleton(e, probe);
    for (const auto& tv : family) {
      if (consensus_under(sk, tv)) continue;
      // confirm on a concrete run before reporting
      for (const auto& cand : family) {
        if (consensus_under(sk, cand)) continue;
        auto t = replay(cfg, &plan, cand, e.pattern(), scope.horizon);
        auto cr = check_consensus(t, cand);
        if (!cr.holds()) {
          if (rep.legal || (cr.punished && !rep.counterexample->report.punished)) {
            PunishReason why = PunishReason::None;
            PunishReason flag = PunishReason::None;
            for (const auto& a : t.agents) {
              if (a.decision.is_punish() && why == PunishReason::None) why = a.verdict.reason;
              if (contains(plan.colluders, a.id) && flag == PunishReason::None)
                flag = a.verdict.reason;
            }
            rep.counterexample = Counterexample{e.pattern(), cand, cr, t.digest(), why, flag};
          }
          rep.legal = false;
          return prefer_punish && !cr.punished;
        }
      }
      ++rep.unconfirmed;
      break;
    }
    return true;
  });
  rep.patterns_checked = st.patterns;
  rep.runs = st.leaves;
  return rep;
}

namespace {

std::vector<PreferenceOrder> orders_with_top(Value top, int value_count) {
  std::vector<Value> rest;
  for (Value v = 0; v < value_count; ++v)
    if (v != top) rest.push_back(v);
  std::vector<PreferenceOrder> out;
  do {
    std::vector<Value> r{top};
    r.insert(r.end(), rest.begin(), rest.end());
    out.emplace_back(r);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return out;
}

Utility skeleton_utility(const Skeleton& s, const TypeVector& tv, AgentId a) {
  Decision d = s.source[a - 1] ? Decision::of(tv.top(s.source[a - 1])) : Decision::undecided();
  return utility(tv.of(a), d, consensus_under(s, tv), s.crashed[a - 1]);
}

}  // namespace

BenefitReport check_benefit(const ProtocolConfig& cfg, const CheaterPlan& plan,
                            const ExploreOptions& scope_in) {
  validate(plan, cfg.n);
  const ExploreOptions scope = plan_scope(plan, scope_in);
  BenefitReport rep;
  rep.scope = describe(scope, cfg.n);
  if (plan.colluders == 0) return rep;
  const TypeVector probe = probe_vector(cfg.n, cfg.value_count, plan.colluders);
  auto strat = strategy_for(plan, cfg, probe);
  const auto tops_family = colluder_top_vectors(cfg.n, cfg.value_count, plan.colluders);
  ExploreStats st = explore(cfg, probe, strat.get(), scope, [&](const Engine& e, std::uint64_t) {
    Skeleton after = skeleton(e, probe);
    EngineOptions eo;
    eo.horizon = scope.horizon;
    eo.record = false;
    Engine honest(cfg, probe, e.pattern(), eo);
    honest.run();
    Skeleton before = skeleton(honest, probe);
    for (const auto& tv : tops_family) {
      Value t = tv.top(members(plan.colluders).front());
      for (const auto& ord : orders_with_top(t, cfg.value_count)) {
        std::vector<PreferenceOrder> prefs;
        for (AgentId a = 1; a <= cfg.n; ++a)
          prefs.push_back(contains(plan.colluders, a) ? ord : tv.of(a));
        TypeVector full(cfg.n, prefs);
        for (AgentId c : members(plan.colluders)) {
          if (!(skeleton_utility(after, full, c) > skeleton_utility(before, full, c))) continue;
          auto th = replay(cfg, nullptr, full, e.pattern(), scope.horizon);
          auto tc = replay(cfg, &plan, full, e.pattern(), scope.horizon);
          Utility ub = agent_utility(th, full, c), ua = agent_utility(tc, full, c);
          if (ua > ub) {
            rep.beneficial = true;
            rep.witness = BenefitWitness{e.pattern(), full, c, ub, ua, th.agents[c - 1].decision,
                                         tc.agents[c - 1].decision};
            return false;
          }
        }
      }
    }
    return true;
  });
  rep.patterns_checked = st.patterns;
  return rep;
}

DictatorReport find_dictator(const ProtocolConfig& cfg, const FailurePattern& pattern, int samples,
                             std::uint64_t seed) {
  std::vector<TypeVector> family;
  if (cfg.value_count <= 3 || samples <= 0) {
    family = all_top_vectors(cfg.n, cfg.value_count);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Value> pick(0, cfg.value_count - 1);
    for (int i = 0; i < samples; ++i) {
      std::vector<Value> tops(cfg.n);
      for (auto& t : tops) t = pick(rng);
      family.push_back(TypeVector::from_tops(tops, cfg.value_count));
    }
  }
  DictatorReport rep;
  AgentSet cand = all_agents(cfg.n);
  std::optional<TypeVector> first;
  EngineOptions eo;
  eo.record = false;
  for (const auto& tv : family) {
    Engine e(cfg, tv, pattern, eo);
    e.run();
    ++rep.runs;
    AgentSet ok = 0;
    for (AgentId a : members(cand)) {
      bool all = true, any = false;
      for (const auto& m : e.machines()) {
        if (m.decision().is_punish()) all = false;
        if (!m.decision().is_value()) continue;
        any = true;
        if (m.decision().value != tv.top(a)) all = false;
      }
      if (all && any) ok |= agent_bit(a);
    }
    cand &= ok;
    if (!first) first = tv;
    if (!cand) {
      rep.witness = {*first, tv};
      return rep;
    }
  }
  rep.dictator = members(cand).front();
  return rep;
}

bool ResilienceSummary::falsified() const {
  return std::any_of(entries.begin(), entries.end(), [](const auto& e) { return e.falsifies(); });
}

std::string ResilienceSummary::to_string() const {
  std::ostringstream os;
  os << "resilience sweep " << rcons::to_string(variant) << " n=" << n << " c=" << c << " f=" << f
     << '\n';
  for (const auto& e : entries) {
    os << "  " << e.plan.to_string() << ": " << e.legality.to_string();
    if (e.benefit) os << "; " << e.benefit->to_string();
    os << '\n';
  }
  const SweepEntry* hit = nullptr;
  for (const auto& e : entries)
    if (e.falsifies()) {
      hit = &e;
      break;
    }
  if (hit) os << "falsified by " << hit->plan.to_string() << '\n';
  else os << "not falsified by catalog (" << entries.size() << " plans; bounded check, not a proof)\n";
  return os.str();
}

ResilienceSummary resilience_sweep(const ProtocolConfig& cfg, int c,
                                   const std::vector<CheaterPlan>& family,
                                   const ExploreOptions& scope) {
  ResilienceSummary s;
  s.variant = cfg.variant;
  s.n = cfg.n;
  s.c = c;
  s.f = cfg.declared_f;
  for (const auto& plan : family) {
    if (set_size(plan.colluders) > c) continue;
    SweepEntry e;
    e.plan = plan;
    e.legality = check_legality(cfg, plan, scope);
    if (e.legality.legal) e.benefit = check_benefit(cfg, plan, scope);
    s.entries.push_back(std::move(e));
  }
  return s;
}

}  // namespace rcons
