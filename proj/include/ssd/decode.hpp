#pragma once

// Decoding operators: temperature, top-k, top-p, the standard
// temper -> top-k -> top-p -> sample pipeline, Gumbel-max sampling, and the
// decode-only normal form (a power transform on a prefix of the base ranking).

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "ssd/categorical.hpp"
#include "ssd/random.hpp"

namespace ssd {

enum class DecodeOp { Temper, TopK, TopP };

/// One of the six orderings of {Temper, TopK, TopP}.
using OpOrder = std::array<DecodeOp, 3>;

inline constexpr OpOrder kStandardOrder = {DecodeOp::Temper, DecodeOp::TopK, DecodeOp::TopP};

/// All six orderings, standard order first.
std::array<OpOrder, 6> all_orders();
/// Parses "temper,top_k,top_p" style names (case-insensitive, '-' or '_').
OpOrder parse_order(std::string_view text);
std::string format_order(const OpOrder& order);

/// Temperatures strictly below this bypass the pipeline and decode greedily.
inline constexpr double kGreedyThreshold = 1e-5;
/// Slack on the top-p cumulative comparison.
inline constexpr double kTopPEpsilon = 1e-12;

struct DecodeConfig {
  double temperature = 1.0;
  int top_k = 0;        // 0 disables
  double top_p = 1.0;   // 1 disables
  OpOrder order = kStandardOrder;

  /// Throws NonPositiveTemperature / InvalidConfig.
  void validate() const;
};

/// Power transform p^(1/T) renormalized on `support` (or the full alphabet).
Categorical temper(const Categorical& p, double temperature, const std::optional<IndexSet>& support = std::nullopt);

/// The k largest-probability tokens in rank order; k == 0 or k >= V keeps the
/// full positive support.
IndexSet top_k_set(const Categorical& p, int k);
/// Smallest descending-probability prefix whose cumulative mass reaches
/// `threshold`. Always holds at least the top token.
IndexSet top_p_set(const Categorical& p, double threshold);

struct RetainedSupport {
  IndexSet support;           // rank order under the tempered distribution
  double kept_mass = 0.0;     // base mass on `support`
  Categorical operational;    // tempered, truncated, renormalized
};

/// Standard-order pipeline: temper, top-k on the tempered distribution, top-p
/// within the top-k survivors.
RetainedSupport retained_support(const Categorical& p0, const DecodeConfig& cfg);

bool greedy_guard(double temperature);

/// argmax_v p(v) / E_v with E_v ~ Exp(1) i.i.d.; restricted to p(v) > 0.
Token gumbel_max_sample(const Categorical& operational, RngStream& stream);

/// Full decode of one token: greedy below the threshold, otherwise the
/// standard pipeline followed by Gumbel-max sampling. `cfg.temperature` may be 0.
Token decode_token(const Categorical& p0, const DecodeConfig& cfg, RngStream& stream);

struct PrefixPolicy {
  std::size_t prefix_len = 0;
  double exponent = 1.0;  // alpha = 1 / tau
  Categorical dist;
};

/// Runs the three operators in `order` with temperature 1/alpha and checks the
/// result is a power-alpha transform on a rank prefix of `p` (within 1e-10).
/// Throws NormalFormViolation otherwise.
PrefixPolicy decode_normal_form(const Categorical& p, const OpOrder& order, double alpha, int k, double top_p);

/// max over surviving pairs of |log(mu_i / mu_j) - alpha log(p_i / p_j)|.
double power_rigidity_check(const PrefixPolicy& policy, const Categorical& base);

}  // namespace ssd
