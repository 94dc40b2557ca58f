#pragma once

// The 16-token toy world: a fail-dominated root branching into two symmetric
// paths, each one fork followed by `lock_count` locks before PASS. Success
// probability under a global (temperature, top-p) decode is an exact product
// over the per-state operational probabilities of the correct tokens.

#include <cstdint>
#include <string>
#include <vector>

#include "ssd/categorical.hpp"

namespace ssd::toy {

enum class StateKind { Root, Fork, Lock };

std::string to_string(StateKind kind);

struct Archetype {
  StateKind kind = StateKind::Lock;
  std::vector<double> head;  // explicit leading probabilities, tokens 0..h-1
  double tail_ratio = 0.5;   // geometric ratio of the remaining tokens
  Categorical dist{1.0};
  std::vector<Token> correct_tokens;

  /// 1-based rank of `token` in the descending ranking of `dist`.
  [[nodiscard]] int rank_of(Token token) const;
};

/// `head` followed by V - |head| tokens t_i proportional to ratio^i summing to 1 - sum(head).
/// Throws InvalidRatio unless 0 < ratio < 1.
Archetype make_archetype(StateKind kind, std::vector<double> head, double tail_ratio, std::size_t vocab,
                         std::vector<Token> correct_tokens);

inline constexpr int kPass = -1;
inline constexpr int kFail = -2;

struct FsmState {
  std::string name;
  Archetype arch;
  std::vector<int> next;  // per token: state index, kPass or kFail
};

struct Fsm {
  std::vector<FsmState> states;
  std::size_t root = 0;
  std::size_t vocab = 16;
  int lock_count = 3;

  [[nodiscard]] const FsmState& state(StateKind kind, int path = 0, int lock = 0) const;
};

struct ToyParams {
  double tail_ratio = 0.5;
  int lock_count = 3;
  std::size_t vocab = 16;
  std::vector<double> root_head{0.200, 0.190, 0.329, 0.126};
  std::vector<double> fork_head{0.148, 0.280, 0.140, 0.144};
  std::vector<double> lock_head{0.750, 0.055, 0.050, 0.037};
};

/// Training-time decode used to distill the toy.
inline constexpr double kTrainTemperature = 0.9;
inline constexpr double kTrainTopP = 0.85;
inline constexpr double kEvalTopP = 0.80;

Fsm build_toy_fsm(const ToyParams& params);
inline Fsm build_toy_fsm(double tail_ratio = 0.5) {
  ToyParams p;
  p.tail_ratio = tail_ratio;
  return build_toy_fsm(p);
}

/// Operational (post-temperature, post-top-p) policy with top-k disabled.
Categorical operational_policy(const Archetype& arch, double temperature, double top_p);

/// Exact probability of reaching PASS from the root.
double exact_success(const Fsm& fsm, double temperature, double top_p);

/// Replaces every state's distribution with its self-distillation target.
Fsm distill_fsm(const Fsm& fsm, double train_temperature, double train_top_p);

struct SweepRow {
  double temperature = 0.0;
  double top_p = 0.0;
  double teacher_success = 0.0;
  double student_success = 0.0;
  double gap = 0.0;  // student - teacher
};

using SweepResult = std::vector<SweepRow>;

SweepResult temperature_sweep(const Fsm& teacher, const Fsm& student, const std::vector<double>& t_grid, double top_p);

struct Optimum {
  double t_star = 0.0;
  double p_star = 0.0;
};

inline constexpr double kOptimizerLow = 0.05;
inline constexpr double kOptimizerHigh = 5.0;

/// Grid search with step 0.001 followed by ternary refinement to |dT| < 1e-4.
Optimum optimize_temperature(const Fsm& fsm, double top_p, double t_lo = kOptimizerLow, double t_hi = kOptimizerHigh);

struct RobustnessRow {
  double top_p = 0.0;
  Optimum teacher;
  Optimum student;
  double gap_pp = 0.0;  // percentage points
};

std::vector<RobustnessRow> topp_robustness_grid(const Fsm& teacher, const Fsm& student,
                                                const std::vector<double>& topp_list, double t_lo = kOptimizerLow,
                                                double t_hi = kOptimizerHigh);

struct MonteCarloResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t n = 0;
};

/// Trajectory i draws from stream (seed, i), so the result does not depend on `threads`.
MonteCarloResult monte_carlo_success(const Fsm& fsm, double temperature, double top_p, std::uint64_t n,
                                     std::uint64_t seed, unsigned threads = 0);

}  // namespace ssd::toy
