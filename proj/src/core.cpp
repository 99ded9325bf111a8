#include "rcons/core.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <numeric>
#include <sstream>

namespace rcons {

int set_size(AgentSet s) { return std::popcount(s); }

std::vector<AgentId> members(AgentSet s) {
  std::vector<AgentId> out;
  for (AgentId a = 1; s != 0; ++a, s >>= 1)
    if (s & 1u) out.push_back(a);
  return out;
}

std::string set_to_string(AgentSet s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (AgentId a : members(s)) {
    if (!first) os << ',';
    os << a;
    first = false;
  }
  os << '}';
  return os.str();
}

std::string to_string(const MessageId& m) {
  std::ostringstream os;
  os << '(' << m.sender << ',' << m.receiver << ',' << m.round << ')';
  return os.str();
}

FailurePattern::FailurePattern(int n, int declared_f)
    : n_(n), declared_f_(declared_f), crashes_(static_cast<std::size_t>(n)) {
  if (n < 1 || n > kMaxAgents) throw ModelError("agent count out of range");
  if (declared_f < 0 || declared_f > n - 1) throw ModelError("declared_f must be in [0, n-1]");
}

int FailurePattern::crash_count() const {
  return static_cast<int>(std::count_if(crashes_.begin(), crashes_.end(),
                                        [](const auto& c) { return c.has_value(); }));
}

AgentSet FailurePattern::crashed_agents() const {
  AgentSet s = 0;
  for (AgentId a = 1; a <= n_; ++a)
    if (crashes_[a - 1]) s |= agent_bit(a);
  return s;
}

void FailurePattern::set_crash(AgentId a, std::optional<CrashSpec> c) {
  if (a < 1 || a > n_) throw ModelError("agent id out of range");
  crashes_[a - 1] = c;
}

bool FailurePattern::is_delivered(const MessageId& m) const {
  const auto& c = crashes_.at(m.sender - 1);
  if (!c) return true;
  if (m.round < c->crash_round) return true;
  if (m.round == c->crash_round) return contains(c->delivered, m.receiver);
  return false;
}

bool FailurePattern::alive_through(AgentId a, Round r) const {
  const auto& c = crashes_.at(a - 1);
  return !c || r < c->crash_round;
}

std::string FailurePattern::to_string() const {
  std::ostringstream os;
  os << "n=" << n_ << " f=" << declared_f_ << " crashes=[";
  bool first = true;
  for (AgentId a = 1; a <= n_; ++a) {
    const auto& c = crashes_[a - 1];
    if (!c) continue;
    if (!first) os << ' ';
    os << a << '@' << c->crash_round << set_to_string(c->delivered);
    first = false;
  }
  os << ']';
  return os.str();
}

FailurePattern parse_pattern(int n, int declared_f, const std::string& text) {
  std::vector<RawCrash> raw;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) ||
                               text[i] == '[' || text[i] == ']' || text[i] == ','))
      ++i;
  };
  auto number = [&] {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(text.substr(i), &used);
    } catch (const std::exception&) {
      throw ModelError("bad pattern text: " + text);
    }
    i += used;
    return v;
  };
  auto expect = [&](char c) {
    if (i >= text.size() || text[i] != c) throw ModelError("bad pattern text: " + text);
    ++i;
  };
  for (skip(); i < text.size(); skip()) {
    RawCrash rc;
    rc.agent = number();
    expect('@');
    rc.round = number();
    expect('{');
    while (i < text.size() && text[i] != '}') {
      if (text[i] == ',' || text[i] == ' ') {
        ++i;
        continue;
      }
      int a = number();
      if (a < 1 || a > n) throw ModelError("bad receiver in pattern text: " + text);
      rc.delivered |= agent_bit(a);
    }
    expect('}');
    raw.push_back(rc);
  }
  return canonicalize(n, declared_f, raw);
}

FailurePattern canonicalize(int n, int declared_f, const std::vector<RawCrash>& raw) {
  FailurePattern out(n, declared_f);
  AgentSet seen = 0;
  for (const auto& rc : raw) {
    if (rc.agent < 1 || rc.agent > n) throw ModelError("crash agent out of range");
    if (contains(seen, rc.agent)) throw ModelError("agent listed twice in crash description");
    if (rc.round < 1) throw ModelError("crash round must be >= 1");
    AgentSet oth = others(n, rc.agent);
    if ((rc.delivered & ~oth) != 0) throw ModelError("delivered set must exclude the crashing agent");
    seen |= agent_bit(rc.agent);
    CrashSpec c{rc.round, rc.delivered};
    if (c.delivered == oth) c = CrashSpec{rc.round + 1, 0};
    out.set_crash(rc.agent, c);
  }
  if (out.crash_count() > declared_f)
    throw ModelError("crash description exceeds declared_f");
  return out;
}

FailurePattern canonicalize(const FailurePattern& f) {
  std::vector<RawCrash> raw;
  for (AgentId a = 1; a <= f.n(); ++a)
    if (const auto& c = f.crash(a)) raw.push_back({a, c->crash_round, c->delivered});
  return canonicalize(f.n(), f.declared_f(), raw);
}

namespace {

std::vector<CrashSpec> crash_options(int n, AgentId a, Round horizon, Granularity g) {
  std::vector<CrashSpec> opts;
  AgentSet oth = others(n, a);
  for (Round r = 1; r <= horizon; ++r) {
    if (g == Granularity::Coarse) {
      opts.push_back({r, 0});
      continue;
    }
    // all proper subsets of oth
    for (AgentSet s = 0;; s = (s - oth) & oth) {
      if (s != oth) opts.push_back({r, s});
      if (s == oth) break;
    }
  }
  return opts;
}

}  // namespace

void for_each_failure_pattern(int n, int f, Round horizon, Granularity g,
                              const std::function<void(const FailurePattern&)>& fn) {
  if (horizon < 1) throw ModelError("horizon must be >= 1");
  if (f < 0 || f > n - 1) throw ModelError("f must be in [0, n-1]");
  std::vector<std::vector<CrashSpec>> opts(static_cast<std::size_t>(n));
  for (AgentId a = 1; a <= n; ++a) opts[a - 1] = crash_options(n, a, horizon, g);

  FailurePattern cur(n, f);
  std::function<void(AgentId, int)> rec = [&](AgentId a, int used) {
    if (a > n) {
      fn(cur);
      return;
    }
    rec(a + 1, used);
    if (used == f) return;
    for (const auto& c : opts[a - 1]) {
      cur.set_crash(a, c);
      rec(a + 1, used + 1);
    }
    cur.set_crash(a, std::nullopt);
  };
  rec(1, 0);
}

std::vector<FailurePattern> enumerate_failure_patterns(int n, int f, Round horizon,
                                                       Granularity g) {
  std::vector<FailurePattern> out;
  for_each_failure_pattern(n, f, horizon, g, [&](const FailurePattern& p) { out.push_back(p); });
  return out;
}

std::uint64_t count_failure_patterns(int n, int f, Round horizon, Granularity g) {
  std::uint64_t per_agent = static_cast<std::uint64_t>(horizon) *
                            (g == Granularity::Fine ? ((std::uint64_t{1} << (n - 1)) - 1) : 1);
  // sum_{j<=f} C(n,j) per_agent^j
  std::uint64_t total = 0, binom = 1, pw = 1;
  for (int j = 0; j <= f; ++j) {
    total += binom * pw;
    binom = binom * static_cast<std::uint64_t>(n - j) / static_cast<std::uint64_t>(j + 1);
    pw *= per_agent;
  }
  return total;
}

PreferenceOrder::PreferenceOrder(std::vector<Value> ranking) : ranking_(std::move(ranking)) {
  std::vector<Value> sorted = ranking_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<Value>(i)) throw ModelError("preference order is not a permutation");
  if (ranking_.empty()) throw ModelError("empty preference order");
}

PreferenceOrder PreferenceOrder::identity(int value_count) {
  std::vector<Value> r(static_cast<std::size_t>(value_count));
  std::iota(r.begin(), r.end(), 0);
  return PreferenceOrder(std::move(r));
}

PreferenceOrder PreferenceOrder::with_top(Value top, int value_count) {
  std::vector<Value> r{top};
  for (Value v = 0; v < value_count; ++v)
    if (v != top) r.push_back(v);
  return PreferenceOrder(std::move(r));
}

int PreferenceOrder::rank(Value v) const {
  auto it = std::find(ranking_.begin(), ranking_.end(), v);
  if (it == ranking_.end()) throw ModelError("value not in preference order");
  return static_cast<int>(it - ranking_.begin());
}

TypeVector::TypeVector(int n, std::vector<PreferenceOrder> prefs) : prefs_(std::move(prefs)) {
  if (static_cast<int>(prefs_.size()) != n) throw ModelError("type vector length must equal n");
  for (const auto& p : prefs_)
    if (p.size() != prefs_.front().size()) throw ModelError("type vector mixes value domains");
}

TypeVector TypeVector::from_tops(const std::vector<Value>& tops, int value_count) {
  std::vector<PreferenceOrder> prefs;
  for (Value t : tops) prefs.push_back(PreferenceOrder::with_top(t, value_count));
  return TypeVector(static_cast<int>(tops.size()), std::move(prefs));
}

std::vector<Value> TypeVector::tops() const {
  std::vector<Value> t;
  for (const auto& p : prefs_) t.push_back(p.top());
  return t;
}

std::string TypeVector::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < prefs_.size(); ++i) {
    if (i) os << ' ';
    for (Value v : prefs_[i].ranking()) os << v;
  }
  os << ']';
  return os.str();
}

TypeVector TypeVector::parse(const std::string& text) {
  std::vector<PreferenceOrder> prefs;
  std::vector<Value> cur;
  auto flush = [&] {
    if (!cur.empty()) prefs.emplace_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    if (std::isdigit(static_cast<unsigned char>(ch))) cur.push_back(ch - '0');
    else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',' || ch == ']') flush();
    else if (ch != '[') throw ModelError("bad type vector text: " + text);
  }
  flush();
  const int n = static_cast<int>(prefs.size());
  return TypeVector(n, std::move(prefs));
}

std::string Decision::to_string() const {
  switch (kind) {
    case Kind::Undecided: return "undecided";
    case Kind::Punish: return "punish";
    case Kind::Value: return "value:" + std::to_string(value);
  }
  return "?";
}

std::string Utility::to_string() const {
  return kind == Kind::NegInf ? "-inf" : std::to_string(value);
}

Utility utility(const PreferenceOrder& pref, const Decision& d, bool consensus_holds,
                bool crashed) {
  if (!consensus_holds) return Utility::neg_inf();
  if (crashed) return Utility::finite(0);
  if (!d.is_value()) return Utility::neg_inf();
  return Utility::finite(pref.size() - pref.rank(d.value));
}

}  // namespace rcons
