#include "ssd/decode.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "ssd/error.hpp"

namespace ssd {

namespace {

std::string_view op_name(DecodeOp op) {
  switch (op) {
    case DecodeOp::Temper: return "temper";
    case DecodeOp::TopK: return "top_k";
    case DecodeOp::TopP: return "top_p";
  }
  return "?";
}

DecodeOp parse_op(std::string name) {
  std::string key;
  for (char c : name) {
    if (c == '-' ) c = '_';
    if (!std::isspace(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "temper" || key == "temperature") return DecodeOp::Temper;
  if (key == "top_k" || key == "topk") return DecodeOp::TopK;
  if (key == "top_p" || key == "topp") return DecodeOp::TopP;
  throw Error(ErrorCode::InvalidConfig, "unknown decode operator '" + name + "'");
}

void check_top_k(int k) {
  if (k < 0) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 0");
}

void check_top_p(double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "top_p must lie in (0, 1]");
}

}  // namespace

std::array<OpOrder, 6> all_orders() {
  using enum DecodeOp;
  return {{{Temper, TopK, TopP},
           {Temper, TopP, TopK},
           {TopK, Temper, TopP},
           {TopK, TopP, Temper},
           {TopP, Temper, TopK},
           {TopP, TopK, Temper}}};
}

OpOrder parse_order(std::string_view text) {
  OpOrder order{};
  std::size_t count = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    if (count == 3) throw Error(ErrorCode::InvalidConfig, "decode order needs exactly three operators");
    order[count++] = parse_op(std::string(text.substr(start, comma - start)));
    start = comma + 1;
  }
  if (count != 3) throw Error(ErrorCode::InvalidConfig, "decode order needs exactly three operators");
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidConfig, "decode order repeats an operator");
  }
  return order;
}

std::string format_order(const OpOrder& order) {
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += ',';
    out += op_name(order[i]);
  }
  return out;
}

void DecodeConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::NonPositiveTemperature, "temperature must be positive and finite");
  }
  check_top_k(top_k);
  check_top_p(top_p);
}

Categorical temper(const Categorical& p, double temperature, const std::optional<IndexSet>& support) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::NonPositiveTemperature, "temperature must be positive and finite");
  }
  if (support && support->empty()) throw Error(ErrorCode::EmptySet, "temper support is empty");
  if (temperature == 1.0) return support ? restrict(p, *support) : p;

  const std::vector<bool> in = support ? support->mask(p.size()) : std::vector<bool>(p.size(), true);
  double log_top = -std::numeric_limits<double>::infinity();
  for (Token v = 0; v < p.size(); ++v) {
    if (in[v] && p[v] > 0.0) log_top = std::max(log_top, std::log(p[v]));
  }
  if (!std::isfinite(log_top)) throw Error(ErrorCode::ZeroMassSupport, "no mass to temper on the support");

  // Work relative to the largest entry so that p^(1/T) cannot underflow wholesale.
  const double inv_t = 1.0 / temperature;
  std::vector<double> w(p.size(), 0.0);
  for (Token v = 0; v < p.size(); ++v) {
    if (in[v] && p[v] > 0.0) w[v] = std::exp((std::log(p[v]) - log_top) * inv_t);
  }
  return normalize(w);
}

IndexSet top_k_set(const Categorical& p, int k) {
  check_top_k(k);
  const std::vector<Token> ranking = descending_ranking(p);
  const std::size_t positive = p.support_size();
  std::size_t keep = positive;
  if (k != 0 && static_cast<std::size_t>(k) < p.size()) keep = std::min(keep, static_cast<std::size_t>(k));
  return IndexSet(std::vector<Token>(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(keep)));
}

IndexSet top_p_set(const Categorical& p, double threshold) {
  check_top_p(threshold);
  const std::vector<Token> ranking = descending_ranking(p);
  const std::size_t positive = p.support_size();
  if (threshold >= 1.0) {
    return IndexSet(std::vector<Token>(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(positive)));
  }
  std::vector<Token> kept;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < positive; ++i) {
    kept.push_back(ranking[i]);
    cumulative += p[ranking[i]];
    if (cumulative >= threshold - kTopPEpsilon) break;
  }
  return IndexSet(std::move(kept));
}

RetainedSupport retained_support(const Categorical& p0, const DecodeConfig& cfg) {
  cfg.validate();
  if (cfg.order != kStandardOrder) {
    throw Error(ErrorCode::InvalidConfig, "retained_support uses the standard order; see decode_normal_form");
  }
  const Categorical tempered = temper(p0, cfg.temperature);
  const IndexSet top_k = top_k_set(tempered, cfg.top_k);
  IndexSet support = top_p_set(restrict(tempered, top_k), cfg.top_p);
  Categorical operational = restrict(tempered, support);
  const double kept = mass(p0, support);
  return {std::move(support), kept, std::move(operational)};
}

bool greedy_guard(double temperature) {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature must be >= 0");
  return temperature < kGreedyThreshold;
}

Token gumbel_max_sample(const Categorical& operational, RngStream& stream) {
  Token best = 0;
  double best_score = -1.0;
  // One draw per alphabet entry keeps stream consumption independent of the support.
  for (Token v = 0; v < operational.size(); ++v) {
    const double noise = stream.exponential();
    if (operational[v] <= 0.0) continue;
    const double score = operational[v] / noise;
    if (score > best_score) {
      best_score = score;
      best = v;
    }
  }
  return best;
}

Token decode_token(const Categorical& p0, const DecodeConfig& cfg, RngStream& stream) {
  if (greedy_guard(cfg.temperature)) return p0.argmax();
  return gumbel_max_sample(retained_support(p0, cfg).operational, stream);
}

PrefixPolicy decode_normal_form(const Categorical& p, const OpOrder& order, double alpha, int k, double top_p) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::NonPositiveTemperature, "exponent must be positive");
  check_top_k(k);
  check_top_p(top_p);

  Categorical current = p;
  for (DecodeOp op : order) {
    switch (op) {
      case DecodeOp::Temper: current = temper(current, 1.0 / alpha); break;
      case DecodeOp::TopK: current = restrict(current, top_k_set(current, k)); break;
      case DecodeOp::TopP: current = restrict(current, top_p_set(current, top_p)); break;
    }
  }

  const std::size_t m = current.support_size();
  const std::vector<Token> ranking = descending_ranking(p);
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const bool kept = current[ranking[i]] > 0.0;
    if (kept != (i < m)) {
      throw Error(ErrorCode::NormalFormViolation,
                  "support is not a rank prefix (rank " + std::to_string(i + 1) + ", order " + format_order(order) + ")");
    }
  }
  PrefixPolicy policy{m, alpha, std::move(current)};
  if (const double dev = power_rigidity_check(policy, p); !(dev <= 1e-10)) {
    throw Error(ErrorCode::NormalFormViolation, "log-odds deviate from the power law by " + std::to_string(dev));
  }
  return policy;
}

double power_rigidity_check(const PrefixPolicy& policy, const Categorical& base) {
  // Pairwise deviations reduce to the spread of log mu_i - alpha log p_i.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Token v = 0; v < policy.dist.size(); ++v) {
    if (policy.dist[v] <= 0.0) continue;
    if (base[v] <= 0.0) return std::numeric_limits<double>::infinity();
    const double d = std::log(policy.dist[v]) - policy.exponent * std::log(base[v]);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace ssd
