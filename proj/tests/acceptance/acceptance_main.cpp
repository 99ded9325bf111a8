// One PASS/FAIL line per acceptance criterion. Optional arguments select
// criteria by number; the exit status is non-zero if any selected one fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rcons/adversary.hpp"
#include "rcons/scenario.hpp"
#include "rcons/verify.hpp"

using namespace rcons;

namespace {

constexpr Variant kVariants[] = {Variant::NewEpoch, Variant::NewEpoch2, Variant::RandNewEpoch2};

// Fixed constant for the O(n^2 f') bounds, taken from the wire format: a
// label entry is 5 bytes, a tag entry 13, at most n^2 of each per round,
// runs last at most 4(f'+1) rounds; 8 more per n^2(f'+1) covers headers.
constexpr double kSizeConstant = 80.0;

struct Result {
  bool pass = false;
  std::string detail;
};

ProtocolConfig config(Variant v, int n, int f) {
  ProtocolConfig c;
  c.variant = v;
  c.n = n;
  c.declared_f = f;
  c.value_count = 3;
  return c;
}

ExploreOptions honest_scope(int f) {
  ExploreOptions o;
  o.crash_round_bound = 2 * f + 3;
  o.horizon = 3 * f + 6;
  o.budget = f;
  return o;
}

Round round_bound(Variant v, int fp) {
  switch (v) {
    case Variant::NewEpoch: return 2 * fp + 2;
    case Variant::NewEpoch2: return 3 * fp + 3;
    case Variant::RandNewEpoch2: return 3 * fp + 4;
  }
  return 0;
}

const char* claimed(Variant v) {
  return v == Variant::NewEpoch ? "2f'+1" : "3f'+2";
}

Round claimed_bound(Variant v, int fp) { return v == Variant::NewEpoch ? 2 * fp + 1 : 3 * fp + 2; }

// Per-variant measurements over suite 1, keyed by actual crash count.
struct Measure {
  std::map<int, Round> max_decide;
  double max_msg_ratio = 0;
  double max_payload_ratio = 0;
  std::uint64_t runs = 0;
  std::uint64_t over_round = 0;
  std::uint64_t over_size = 0;
};

std::map<Variant, Measure> g_measure;
bool g_suite_done = false;

TypeVector probe_types(int n) {
  std::vector<Value> tops(n);
  for (int i = 0; i < n; ++i) tops[i] = i % 3;
  return TypeVector::from_tops(tops, 3);
}

void measure_suite() {
  if (g_suite_done) return;
  g_suite_done = true;
  for (Variant v : kVariants)
    for (int n : {3, 4})
      for (int f = 1; f <= n - 1; ++f) {
        auto cfg = config(v, n, f);
        auto scope = honest_scope(f);
        scope.measure = true;
        auto& m = g_measure[v];
        explore(cfg, probe_types(n), nullptr, scope, [&](const Engine& e, std::uint64_t) {
          ++m.runs;
          int fp = 0;
          for (AgentId a = 1; a <= n; ++a) {
            const auto& c = e.pattern().crash(a);
            if (c && c->crash_round <= e.round()) ++fp;
          }
          Round worst = 0;
          for (const auto& mc : e.machines()) worst = std::max(worst, mc.decide_round());
          auto& slot = m.max_decide[fp];
          slot = std::max(slot, worst);
          if (worst > round_bound(v, fp)) ++m.over_round;
          const double cap = static_cast<double>(n * n * (fp + 1));
          const double mr = static_cast<double>(e.message_count()) / cap;
          const double pr = static_cast<double>(e.max_payload()) / cap;
          m.max_msg_ratio = std::max(m.max_msg_ratio, mr);
          m.max_payload_ratio = std::max(m.max_payload_ratio, pr);
          if (mr > kSizeConstant || pr > kSizeConstant) ++m.over_size;
          return true;
        });
      }
}

Result criterion1() {
  Result r{true, ""};
  std::uint64_t patterns = 0, runs = 0, unconfirmed = 0;
  std::ostringstream fails;
  for (Variant v : kVariants)
    for (int n : {3, 4})
      for (int f = 1; f <= n - 1; ++f) {
        auto cfg = config(v, n, f);
        auto rep = check_legality(cfg, CheaterPlan{}, honest_scope(f));
        patterns += rep.patterns_checked;
        runs += rep.runs;
        unconfirmed += rep.unconfirmed;
        if (!rep.legal || rep.unconfirmed ||
            rep.patterns_checked != count_failure_patterns(n, f, 2 * f + 3, Granularity::Fine)) {
          r.pass = false;
          fails << ' ' << to_string(v) << " n=" << n << " f=" << f << ": " << rep.to_string();
        }
      }
  // n=3 and n=4 f=1: direct runs for every top vector, no mapping
  std::uint64_t direct = 0;
  for (Variant v : kVariants)
    for (auto [n, f] : {std::pair{3, 1}, std::pair{3, 2}, std::pair{4, 1}}) {
      auto cfg = config(v, n, f);
      const auto family = all_top_vectors(n, 3);
      explore(cfg, probe_types(n), nullptr, honest_scope(f), [&](const Engine& e, std::uint64_t) {
        for (const auto& tv : family) {
          EngineOptions eo;
          eo.horizon = 3 * f + 6;
          eo.record = false;
          auto t = run(cfg, tv, e.pattern(), eo);
          ++direct;
          auto cr = check_consensus(t, tv);
          if (!cr.holds()) {
            if (r.pass)
              fails << " direct run " << to_string(v) << ' ' << e.pattern().to_string() << ' '
                    << tv.to_string() << ": " << cr.to_string();
            r.pass = false;
          }
        }
        return true;
      });
    }
  std::ostringstream os;
  os << patterns << " patterns (" << runs << " distinct runs) x all |V|=3 top vectors, 3 variants,"
     << " n in {3,4}; unconfirmed " << unconfirmed << "; " << direct
     << " direct runs (n=3; n=4 f=1) agree" << fails.str();
  r.detail = os.str();
  return r;
}

Result criterion2() {
  measure_suite();
  Result r{true, ""};
  std::ostringstream os;
  for (Variant v : kVariants) {
    const auto& m = g_measure[v];
    if (m.over_round) r.pass = false;
    os << to_string(v) << " max decide round by f':";
    bool gap = false;
    for (auto [fp, d] : m.max_decide) {
      os << ' ' << fp << "->" << d << "(<=" << round_bound(v, fp) << ')';
      if (d > claimed_bound(v, fp)) gap = true;
    }
    os << "; stated " << claimed(v) << (gap ? " exceeded by one (off-by-one question)" : " met")
       << "; ";
  }
  r.detail = os.str();
  return r;
}

Result criterion3() {
  measure_suite();
  Result r{true, ""};
  std::ostringstream os;
  os << "C=" << kSizeConstant << ";";
  for (Variant v : kVariants) {
    const auto& m = g_measure[v];
    if (m.over_size) r.pass = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, " %s: max messages/(n^2(f'+1)) %.2f, max payload bytes/(n^2(f'+1)) %.2f over %llu runs;",
                  to_string(v), m.max_msg_ratio, m.max_payload_ratio,
                  static_cast<unsigned long long>(m.runs));
    os << buf;
  }
  r.detail = os.str();
  return r;
}

std::string decisions(const std::vector<Decision>& ds) {
  std::string s = "(";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i) s += ',';
    s += ds[i].decided() ? ds[i].to_string() : "-";
  }
  return s + ")";
}

Result criterion4() {
  Result r{true, ""};
  std::ostringstream os;
  auto v = [](Value x) { return Decision::of(x); };
  const Decision u = Decision::undecided();
  // agent i proposes i-1: v_1 = 0, v_2 = 1
  auto a = run_flood_case(FloodCase::A);
  bool ok_a = a.decisions == std::vector<Decision>{u, v(1), v(1)} &&
              a.honest_decisions == std::vector<Decision>{u, v(0), v(0)} && !a.detected;
  auto b = run_flood_case(FloodCase::B);
  bool ok_b = b.decisions == std::vector<Decision>{u, v(0), v(1)} && !b.detected;
  auto c = run_flood_case(FloodCase::C);
  bool ok_c = c.detected;
  auto d = run_flood_case(FloodCase::D);
  bool ok_d = d.decisions == std::vector<Decision>{u, v(1), v(1)} &&
              d.honest_decisions == std::vector<Decision>{u, v(0), v(0)} && !d.detected;
  r.pass = ok_a && ok_b && ok_c && ok_d;
  os << "a " << decisions(a.decisions) << " vs honest " << decisions(a.honest_decisions)
     << (ok_a ? " ok" : " BAD") << "; b " << decisions(b.decisions) << (ok_b ? " ok" : " BAD")
     << "; c detected=" << c.detected << (ok_c ? " ok" : " BAD") << "; d "
     << decisions(d.decisions) << " undetected=" << !d.detected << (ok_d ? " ok" : " BAD");
  r.detail = os.str();
  return r;
}

Result criterion5() {
  auto fx = ce_fixture("CE1");
  auto leg = check_legality(fx.config, fx.plan, fx.sweep);
  auto ben = check_benefit(fx.config, fx.plan, fx.sweep);
  auto cfg2 = fx.config;
  cfg2.variant = Variant::NewEpoch2;
  auto sweep = resilience_sweep(cfg2, 2, {fx.plan}, fx.sweep);
  Result r;
  r.pass = leg.legal && ben.beneficial && !sweep.falsified();
  std::ostringstream os;
  os << "NewEpoch: " << leg.to_string() << "; " << ben.to_string() << " | NewEpoch2: "
     << sweep.to_string();
  r.detail = os.str();
  return r;
}

Result criterion6() {
  auto fx = ce_fixture("CE2");
  auto leg = check_legality(fx.config, fx.plan, fx.sweep);
  auto ben = check_benefit(fx.config, fx.plan, fx.sweep);
  auto t = run(fx.config, fx.types, fx.pattern, {}, instantiate(fx.plan, fx.config, fx.types));
  bool v1 = true;
  int tops = 0;
  for (const auto& a : t.agents) {
    if (a.decision.is_punish() || !a.verdict.ok()) ++tops;
    if (a.decision.decided() && a.decision != Decision::of(fx.types.top(1))) v1 = false;
  }
  auto rx = ce_fixture("CE2-Rand");
  int punished = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    auto cfg = rx.config;
    cfg.seed = s;
    EngineOptions eo;
    eo.record = false;
    auto tr = run(cfg, rx.types, rx.pattern, eo, instantiate(rx.plan, cfg, rx.types));
    if (tr.agents[2].decision.is_punish()) ++punished;
  }
  Result r;
  r.pass = leg.legal && ben.beneficial && v1 && tops == 0 && rx.config.tag_bits == 16 &&
           punished >= 998;
  std::ostringstream os;
  os << "NewEpoch2: " << leg.to_string() << "; " << ben.to_string() << "; decision v_1 "
     << (v1 ? "yes" : "no") << ", verdicts " << tops << " | RandNewEpoch2 tag_bits "
     << rx.config.tag_bits << ": honest agent 3 decided the punishment value in " << punished
     << "/1000 seeds";
  r.detail = os.str();
  return r;
}

Result criterion7() {
  Result r{true, ""};
  std::ostringstream os;
  {
    auto cfg = config(Variant::NewEpoch, 4, 2);
    const Round max_round = 2 * 2 + 3;
    auto family = pretend_crash_catalog(4, 2, max_round);
    int effective = 0, crash_count = 0, noop = 0;
    std::string bad;
    for (const auto& p : family) {
      auto rep = check_legality(cfg, p, default_scope(cfg), true);
      if (rep.legal) {
        // withholds nothing from a running honest agent in any explored run:
        // the profile behaves exactly like the honest protocol
        if (rep.deviating_runs == 0) {
          ++noop;
          continue;
        }
        r.pass = false;
        if (bad.empty()) bad = p.to_string() + " " + rep.to_string();
        continue;
      }
      ++effective;
      if (rep.counterexample->report.punished &&
          rep.counterexample->punish_reason == PunishReason::TooManyCrashes)
        ++crash_count;
      else if (bad.empty())
        bad = p.to_string() + " " + rep.to_string();
    }
    if (crash_count != effective) r.pass = false;
    os << "NewEpoch n=4 f=2: " << family.size() << " plans, " << crash_count << "/" << effective
       << " deviating plans illegal via too-many-crashes punishment, " << noop
       << " plans never withhold a message from a running honest agent";
    if (!bad.empty()) os << "; first miss: " << bad;
  }
  {
    auto cfg = config(Variant::NewEpoch2, 4, 3);
    auto family = pretend_crash_catalog(4, 2, 3);
    auto sum = resilience_sweep(cfg, 2, family, default_scope(cfg));
    int illegal = 0, starved = 0, legal = 0;
    for (const auto& e : sum.entries) {
      if (e.legality.legal) {
        ++legal;
        continue;
      }
      ++illegal;
      // honest agents stop addressing the pretender, so it never completes
      // the new dictator's value
      const auto& cx = *e.legality.counterexample;
      const auto& und = cx.report.undecided;
      if (cx.colluder_flag == PunishReason::MissingHalf ||
          std::find(und.begin(), und.end(), e.plan.params.cheater) != und.end())
        ++starved;
    }
    if (sum.falsified()) r.pass = false;
    os << " | NewEpoch2 n=4 f=3: " << family.size() << " plans (rounds 1..3), "
       << (sum.falsified() ? "FALSIFIED" : "none legal-with-benefit") << ", " << illegal
       << " illegal (" << starved << " with the cheater left without the deciding value), "
       << legal << " legal without benefit";
  }
  r.detail = os.str();
  return r;
}

Result criterion8() {
  auto fx = ce_fixture("CE3");
  auto leg2 = check_legality(fx.config, fx.plan, fx.sweep);
  auto ben2 = check_benefit(fx.config, fx.plan, fx.sweep);
  auto plan4 = fx.plan;
  plan4.effective_f = 4;
  auto leg4 = check_legality(fx.config, plan4, fx.sweep);
  bool with_benefit4 = leg4.legal && check_benefit(fx.config, plan4, fx.sweep).beneficial;
  Result r;
  r.pass = leg2.legal && ben2.beneficial && !with_benefit4;
  std::ostringstream os;
  os << "effective_f=2: " << leg2.to_string() << "; " << ben2.to_string() << " | effective_f=4: "
     << leg4.to_string();
  r.detail = os.str();
  return r;
}

Round newepoch_end(Variant v) {
  switch (v) {
    case Variant::NewEpoch: return 1;
    case Variant::NewEpoch2: return 2;
    case Variant::RandNewEpoch2: return 3;
  }
  return 0;
}

Result criterion9() {
  Result r{true, ""};
  std::ostringstream os;
  std::uint64_t checked = 0, singles = 0;
  std::string bad;
  for (Variant v : kVariants) {
    auto cfg = config(v, 4, 2);
    for (int f = 0; f <= 2; ++f) {
      ExploreOptions o;
      o.crash_round_bound = 8;
      o.horizon = 3 * 2 + 6;
      o.budget = f;
      std::set<std::string> seen;
      explore(cfg, probe_types(4), nullptr, o, [&](const Engine& e, std::uint64_t) {
        if (!seen.insert(e.pattern().to_string()).second) return true;
        ++checked;
        auto d = find_dictator(cfg, e.pattern());
        if (!d.dictator) {
          r.pass = false;
          if (bad.empty()) bad = std::string(to_string(v)) + " " + e.pattern().to_string();
        }
        return true;
      });
    }
    if (find_dictator(cfg, FailurePattern(4, 2)).dictator != 1) {
      r.pass = false;
      bad += " failure-free dictator not 1";
    }
    for (AgentId a = 1; a <= 4; ++a)
      for (Round k = 1; k <= 4; ++k)
        for (AgentSet d = 0; d < others(4, a); ++d) {
          if (d & agent_bit(a)) continue;
          FailurePattern fp(4, 2);
          fp.set_crash(a, CrashSpec{k, d});
          AgentId expect = 1;
          if (a == 1 && k <= newepoch_end(v)) expect = members(others(4, 1) & ~d).front();
          ++singles;
          if (find_dictator(cfg, fp).dictator != expect) {
            r.pass = false;
            if (bad.empty()) bad = std::string(to_string(v)) + " single crash " + fp.to_string();
          }
        }
  }
  os << checked << " explored patterns (n=4, f<=2, crash rounds <= 8, 3 variants) each with a"
     << " dictator over all 81 top vectors; failure-free dictator 1; " << singles
     << " single-crash patterns follow the min-id successor rule";
  if (!bad.empty()) os << "; first miss: " << bad;
  r.detail = os.str();
  return r;
}

Result criterion10() {
  Result r{true, ""};
  std::map<RunProperty, std::uint64_t> checked;
  std::uint64_t violations = 0, runs = 0;
  Round deepest = 0;
  std::string first;
  for (Variant v : kVariants) {
    auto cfg = config(v, 5, 4);
    for (std::uint64_t s = 0; s < 1000; ++s) {
      auto fp = s % 2 ? random_dictator_pattern(5, 4, s) : random_pattern(5, 4, 11, s);
      std::vector<Value> tops(5);
      for (int i = 0; i < 5; ++i) tops[i] = static_cast<Value>((s + 2 * i) % 3);
      auto rep = check_run_properties(cfg, TypeVector::from_tops(tops, 3), fp);
      ++runs;
      deepest = std::max(deepest, rep.evaluated_through);
      for (std::size_t i = 0; i < rep.checked.size(); ++i)
        checked[all_run_properties()[i]] += rep.checked[i];
      if (!rep.ok()) {
        violations += rep.violations.size();
        if (first.empty()) {
          const auto& x = rep.violations.front();
          first = std::string(to_string(x.property)) + " " + to_string(v) + " " + fp.to_string() +
                  " round " + std::to_string(x.round) + ": " + x.detail;
        }
      }
    }
  }
  std::ostringstream os;
  os << runs << " runs (1000 patterns x 3 variants, n=5 f=4), evaluated up to round " << deepest
     << ", " << violations << " violations;";
  for (auto [p, c] : checked) {
    os << ' ' << to_string(p) << '=' << c;
    if (c == 0) r.pass = false;  // a property that was never exercised proves nothing
  }
  if (violations) {
    r.pass = false;
    os << "; first: " << first;
  }
  r.detail = os.str();
  return r;
}

Result criterion11() {
  auto fx = ce_fixture("ImpDemo");
  auto leg = check_legality(fx.config, fx.plan, fx.sweep);
  auto ben = check_benefit(fx.config, fx.plan, fx.sweep);
  Result r;
  r.pass = fx.plan.private_channel && leg.legal && ben.beneficial;
  r.detail = "NewEpoch2 with private channel: " + leg.to_string() + "; " + ben.to_string();
  return r;
}

Result criterion12() {
  Result r{true, ""};
  int stable = 0, total = 0;
  for (const auto& name : fixture_names()) {
    // the shipped scenario files, as the command-line tool reads them
    auto sc = load_scenario(std::string(RCONS_SOURCE_DIR) + "/fixtures/" + name + ".json");
    ++total;
    std::set<std::string> seen;
    for (int rep = 0; rep < 10; ++rep) {
      if (sc.flood) {
        auto o = run_flood_case(*sc.flood);
        std::string key;
        for (const auto& l : o.log) key += l + '\n';
        seen.insert(key);
      } else {
        auto cfg = sc.config;
        cfg.seed = 7;
        EngineOptions eo;
        eo.horizon = sc.horizon;
        auto t = run(cfg, sc.types, *sc.pattern, eo, scenario_strategy(sc, cfg, sc.types));
        seen.insert(std::to_string(t.digest()));
      }
    }
    if (seen.size() == 1) ++stable;
    else r.pass = false;
  }
  r.detail = std::to_string(stable) + "/" + std::to_string(total) +
             " scenario files with one transcript digest across 10 repetitions each";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Result()>> all = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  bool ok = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Result res;
    try {
      res = all[i]();
    } catch (const std::exception& e) {
      res = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && res.pass;
    char tm[32];
    std::snprintf(tm, sizeof tm, "%.1fs", secs);
    std::replace(res.detail.begin(), res.detail.end(), '\n', ' ');
    std::cout << "criterion " << id << ": " << (res.pass ? "PASS" : "FAIL") << " [" << tm << "] "
              << res.detail << std::endl;
  }
  return ok ? 0 : 1;
}
