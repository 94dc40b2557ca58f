#include "ssd/toyfsm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "ssd/decode.hpp"
#include "ssd/error.hpp"
#include "ssd/objective.hpp"
#include "ssd/random.hpp"

namespace ssd::toy {

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Root: return "root";
    case StateKind::Fork: return "fork";
    case StateKind::Lock: return "lock";
  }
  return "?";
}

int Archetype::rank_of(Token token) const {
  const std::vector<Token> ranking = descending_ranking(dist);
  return static_cast<int>(std::find(ranking.begin(), ranking.end(), token) - ranking.begin()) + 1;
}

Archetype make_archetype(StateKind kind, std::vector<double> head, double tail_ratio, std::size_t vocab,
                         std::vector<Token> correct_tokens) {
  if (!(tail_ratio > 0.0 && tail_ratio < 1.0)) throw Error(ErrorCode::InvalidRatio, "tail ratio must lie in (0, 1)");
  if (head.size() >= vocab) throw Error(ErrorCode::InvalidConfig, "head must leave at least one tail token");
  const double head_mass = std::accumulate(head.begin(), head.end(), 0.0);
  const double residual = 1.0 - head_mass;
  if (!(residual > 0.0)) throw Error(ErrorCode::InvalidConfig, "head probabilities must sum below 1");

  const std::size_t tail = vocab - head.size();
  // Closed-form geometric normalizer (1 - r) / (1 - r^n).
  const double first = residual * (1.0 - tail_ratio) / (1.0 - std::pow(tail_ratio, static_cast<double>(tail)));
  std::vector<double> probs = head;
  double term = first;
  for (std::size_t i = 0; i < tail; ++i) {
    probs.push_back(term);
    term *= tail_ratio;
  }
  for (Token t : correct_tokens) {
    if (t >= vocab) throw Error(ErrorCode::IndexOutOfRange, "correct token outside alphabet");
  }
  return {kind, std::move(head), tail_ratio, Categorical(std::move(probs)), std::move(correct_tokens)};
}

const FsmState& Fsm::state(StateKind kind, int path, int lock) const {
  int seen_paths = -1;
  int seen_locks = 0;
  for (const FsmState& s : states) {
    if (s.arch.kind == StateKind::Root && kind == StateKind::Root) return s;
    if (s.arch.kind == StateKind::Fork) {
      ++seen_paths;
      seen_locks = 0;
      if (kind == StateKind::Fork && seen_paths == path) return s;
    } else if (s.arch.kind == StateKind::Lock) {
      if (kind == StateKind::Lock && seen_paths == path && seen_locks == lock) return s;
      ++seen_locks;
    }
  }
  throw Error(ErrorCode::IndexOutOfRange, "no such state");
}

Fsm build_toy_fsm(const ToyParams& params) {
  if (params.lock_count < 0) throw Error(ErrorCode::InvalidConfig, "lock count must be >= 0");
  const std::size_t v = params.vocab;
  if (v < 3) throw Error(ErrorCode::InvalidConfig, "vocabulary too small for the toy");
  const Archetype root = make_archetype(StateKind::Root, params.root_head, params.tail_ratio, v, {0, 1});
  const Archetype fork = make_archetype(StateKind::Fork, params.fork_head, params.tail_ratio, v, {0});
  const Archetype lock = make_archetype(StateKind::Lock, params.lock_head, params.tail_ratio, v, {0});

  Fsm fsm;
  fsm.vocab = v;
  fsm.lock_count = params.lock_count;
  fsm.states.push_back({"root", root, std::vector<int>(v, kFail)});

  const int per_path = 1 + params.lock_count;
  for (int path = 0; path < 2; ++path) {
    const int first = static_cast<int>(fsm.states.size());
    fsm.states[0].next[static_cast<std::size_t>(path)] = first;
    const std::string tag = path == 0 ? "A" : "B";
    for (int j = 0; j < per_path; ++j) {
      const int self = first + j;
      const int advance = j + 1 < per_path ? self + 1 : kPass;
      std::vector<int> next(v, kFail);
      next[0] = advance;
      if (j == 0) {
        fsm.states.push_back({"fork_" + tag, fork, std::move(next)});
      } else {
        fsm.states.push_back({"lock_" + tag + std::to_string(j), lock, std::move(next)});
      }
    }
  }
  return fsm;
}

Categorical operational_policy(const Archetype& arch, double temperature, double top_p) {
  DecodeConfig cfg;
  cfg.temperature = temperature;
  cfg.top_k = 0;
  cfg.top_p = top_p;
  return retained_support(arch.dist, cfg).operational;
}

namespace {

std::vector<Categorical> operational_table(const Fsm& fsm, double temperature, double top_p) {
  std::vector<Categorical> table;
  table.reserve(fsm.states.size());
  for (const FsmState& s : fsm.states) table.push_back(operational_policy(s.arch, temperature, top_p));
  return table;
}

}  // namespace

double exact_success(const Fsm& fsm, double temperature, double top_p) {
  const std::vector<Categorical> table = operational_table(fsm, temperature, top_p);
  // Transitions only point forward, so a reverse sweep sees every successor first.
  std::vector<double> value(fsm.states.size(), 0.0);
  for (std::size_t i = fsm.states.size(); i-- > 0;) {
    const FsmState& s = fsm.states[i];
    double p = 0.0;
    for (Token t = 0; t < fsm.vocab; ++t) {
      const int nx = s.next[t];
      if (nx == kFail || table[i][t] == 0.0) continue;
      if (nx != kPass && static_cast<std::size_t>(nx) <= i) {
        throw Error(ErrorCode::InvalidConfig, "toy transitions must point forward");
      }
      p += table[i][t] * (nx == kPass ? 1.0 : value[static_cast<std::size_t>(nx)]);
    }
    value[i] = p;
  }
  return std::clamp(value[fsm.root], 0.0, 1.0);
}

Fsm distill_fsm(const Fsm& fsm, double train_temperature, double train_top_p) {
  DecodeConfig cfg;
  cfg.temperature = train_temperature;
  cfg.top_k = 0;
  cfg.top_p = train_top_p;
  Fsm student = fsm;
  for (FsmState& s : student.states) s.arch.dist = ssd_target(s.arch.dist, cfg).q;
  return student;
}

SweepResult temperature_sweep(const Fsm& teacher, const Fsm& student, const std::vector<double>& t_grid, double top_p) {
  if (t_grid.empty()) throw Error(ErrorCode::InvalidConfig, "temperature grid is empty");
  SweepResult rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) {
    const double pt = exact_success(teacher, t, top_p);
    const double ps = exact_success(student, t, top_p);
    rows.push_back({t, top_p, pt, ps, ps - pt});
  }
  return rows;
}

Optimum optimize_temperature(const Fsm& fsm, double top_p, double t_lo, double t_hi) {
  if (!(t_lo > 0.0 && t_lo < t_hi) || !std::isfinite(t_hi)) {
    throw Error(ErrorCode::InvalidConfig, "temperature bounds must satisfy 0 < lo < hi");
  }
  constexpr double kStep = 1e-3;
  constexpr double kResolution = 1e-4;
  const auto cells = static_cast<std::size_t>(std::floor((t_hi - t_lo) / kStep + 1e-9));

  Optimum best{t_lo, -1.0};
  std::size_t best_cell = 0;
  for (std::size_t i = 0; i <= cells + 1; ++i) {
    const double t = i <= cells ? t_lo + static_cast<double>(i) * kStep : t_hi;
    const double p = exact_success(fsm, t, top_p);
    if (p > best.p_star) {
      best = {t, p};
      best_cell = i;
    }
  }

  double a = std::max(t_lo, t_lo + (static_cast<double>(best_cell) - 1.0) * kStep);
  double b = std::min(t_hi, t_lo + (static_cast<double>(best_cell) + 1.0) * kStep);
  while (b - a >= kResolution) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (exact_success(fsm, m1, top_p) < exact_success(fsm, m2, top_p)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  const double t_mid = 0.5 * (a + b);
  // The objective is only piecewise smooth; never return worse than the grid.
  if (const double p_mid = exact_success(fsm, t_mid, top_p); p_mid > best.p_star) best = {t_mid, p_mid};
  return best;
}

std::vector<RobustnessRow> topp_robustness_grid(const Fsm& teacher, const Fsm& student,
                                                const std::vector<double>& topp_list, double t_lo, double t_hi) {
  if (topp_list.empty()) throw Error(ErrorCode::InvalidConfig, "top-p list is empty");
  std::vector<RobustnessRow> rows;
  for (double top_p : topp_list) {
    const Optimum t = optimize_temperature(teacher, top_p, t_lo, t_hi);
    const Optimum s = optimize_temperature(student, top_p, t_lo, t_hi);
    rows.push_back({top_p, t, s, 100.0 * (s.p_star - t.p_star)});
  }
  return rows;
}

MonteCarloResult monte_carlo_success(const Fsm& fsm, double temperature, double top_p, std::uint64_t n,
                                     std::uint64_t seed, unsigned threads) {
  if (n < 1) throw Error(ErrorCode::OutOfRange, "Monte Carlo needs n >= 1");
  const bool greedy = greedy_guard(temperature);
  std::vector<Categorical> table;
  if (greedy) {
    for (const FsmState& s : fsm.states) table.push_back(Categorical::delta(fsm.vocab, s.arch.dist.argmax()));
  } else {
    table = operational_table(fsm, temperature, top_p);
  }

  auto simulate = [&](std::uint64_t begin, std::uint64_t end) {
    std::uint64_t wins = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      RngStream stream(seed, i);
      int state = static_cast<int>(fsm.root);
      while (state >= 0) {
        const auto idx = static_cast<std::size_t>(state);
        state = fsm.states[idx].next[gumbel_max_sample(table[idx], stream)];
      }
      wins += state == kPass ? 1 : 0;
    }
    return wins;
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
  std::vector<std::uint64_t> partial(workers, 0);
  {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min<std::uint64_t>(n, w * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] { partial[w] = simulate(begin, end); });
    }
  }
  MonteCarloResult out;
  out.n = n;
  out.successes = std::accumulate(partial.begin(), partial.end(), std::uint64_t{0});
  out.estimate = static_cast<double>(out.successes) / static_cast<double>(n);
  out.standard_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(n));
  return out;
}

}  // namespace ssd::toy
