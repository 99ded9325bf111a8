#include "rcons/explore.hpp"

#include <bit>
#include <functional>
#include <vector>

namespace rcons {

namespace {

struct Choice {
  AgentId agent;
  AgentSet delivered;
  std::uint64_t weight;
};

std::uint64_t per_round_options(int n, Granularity g) {
  return g == Granularity::Fine ? (std::uint64_t{1} << (n - 1)) - 1 : 1;
}

// Crash options for one agent in the prepared round.
std::vector<Choice> crash_choices(int n, AgentId a, AgentSet sent_to, Granularity g) {
  std::vector<Choice> out;
  if (g == Granularity::Coarse) {
    out.push_back({a, 0, 1});
    return out;
  }
  const AgentSet oth = others(n, a);
  const std::uint64_t spread = std::uint64_t{1} << std::popcount(oth & ~sent_to);
  for (AgentSet t = 0;; t = (t - sent_to) & sent_to) {
    std::uint64_t w = spread;
    if (t == sent_to) w -= 1;  // drop the full-delivery completion
    if (w > 0) out.push_back({a, t, w});
    if (t == sent_to) break;
  }
  return out;
}

struct Explorer {
  const ExploreOptions& opts;
  const LeafVisitor& visit;
  int n;
  AgentSet branch;
  ExploreStats stats;

  bool leaf(const Engine& e, int used, std::uint64_t mult) {
    // crashes after an agent's last send cannot change the run
    std::vector<std::uint64_t> ways{1};
    const std::uint64_t per = per_round_options(n, opts.granularity);
    for (AgentId a : members(branch)) {
      const auto& c = e.pattern().crash(a);
      if (c) continue;
      Round last = e.last_active(a);
      if (last >= opts.crash_round_bound) continue;
      std::uint64_t cnt = static_cast<std::uint64_t>(opts.crash_round_bound - last) * per;
      ways.push_back(0);
      for (std::size_t j = ways.size() - 1; j > 0; --j) ways[j] += ways[j - 1] * cnt;
    }
    std::uint64_t late = 0;
    for (int j = 0; j <= opts.budget - used && j < static_cast<int>(ways.size()); ++j) late += ways[j];
    std::uint64_t m = mult * late;
    ++stats.leaves;
    stats.patterns += m;
    if (!visit(e, m)) {
      stats.stopped = true;
      return false;
    }
    return true;
  }

  bool rec(Engine e, int used, std::uint64_t mult) {
    ++stats.nodes;
    if (e.finished()) return leaf(e, used, mult);
    e.prepare_round();
    const Round k = e.round() + 1;
    std::vector<AgentId> cand;
    if (k <= opts.crash_round_bound && used < opts.budget)
      for (AgentId a : members(branch))
        if (e.sending(a) && !e.pattern().crash(a)) cand.push_back(a);
    // enumerate subsets of crashing candidates with their delivered sets
    std::vector<std::vector<Choice>> options;
    for (AgentId a : cand) options.push_back(crash_choices(n, a, e.recipients(a), opts.granularity));
    std::vector<Choice> picked;
    bool go = true;
    std::function<void(std::size_t, int, std::uint64_t)> pick = [&](std::size_t i, int u,
                                                                     std::uint64_t w) {
      if (!go) return;
      if (i == cand.size()) {
        Engine child = e;
        for (const auto& c : picked) child.crash_now(c.agent, c.delivered);
        child.finish_round();
        go = rec(std::move(child), u, w);
        return;
      }
      pick(i + 1, u, w);
      if (u >= opts.budget) return;
      for (const auto& c : options[i]) {
        picked.push_back(c);
        pick(i + 1, u + 1, w * c.weight);
        picked.pop_back();
        if (!go) return;
      }
    };
    pick(0, used, mult);
    return go;
  }
};

}  // namespace

ExploreStats explore(const ProtocolConfig& cfg, const TypeVector& types, const Strategy* strategy,
                     const ExploreOptions& opts, const LeafVisitor& visit) {
  FailurePattern base(cfg.n, cfg.declared_f);
  if (opts.base.n() == cfg.n)
    for (AgentId a = 1; a <= cfg.n; ++a) base.set_crash(a, opts.base.crash(a));
  AgentSet branch = opts.branch_agents ? opts.branch_agents : all_agents(cfg.n);
  branch &= ~base.crashed_agents();
  if (opts.budget > cfg.declared_f) throw ModelError("explore budget exceeds declared_f");
  EngineOptions eo;
  eo.horizon = opts.horizon;
  eo.record = false;
  eo.measure = opts.measure;
  Engine root(cfg, types, base, eo, strategy ? strategy->clone() : nullptr);
  if (root.horizon() < opts.crash_round_bound)
    throw ModelError("horizon must cover the crash round bound");
  Explorer ex{opts, visit, cfg.n, branch, {}};
  ex.rec(std::move(root), base.crash_count(), 1);
  return ex.stats;
}

std::uint64_t explored_pattern_count(int n, const ExploreOptions& opts) {
  int fixed = opts.base.n() == n ? opts.base.crash_count() : 0;
  AgentSet branch = opts.branch_agents ? opts.branch_agents : all_agents(n);
  if (opts.base.n() == n) branch &= ~opts.base.crashed_agents();
  int b = set_size(branch);
  std::uint64_t per = static_cast<std::uint64_t>(opts.crash_round_bound) *
                      per_round_options(n, opts.granularity);
  std::uint64_t total = 0, binom = 1, pw = 1;
  for (int j = 0; j <= opts.budget - fixed && j <= b; ++j) {
    total += binom * pw;
    binom = binom * static_cast<std::uint64_t>(b - j) / static_cast<std::uint64_t>(j + 1);
    pw *= per;
  }
  return total;
}

}  // namespace rcons
