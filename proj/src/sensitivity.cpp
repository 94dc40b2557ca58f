#include "ssd/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssd/decode.hpp"
#include "ssd/error.hpp"

namespace ssd {

namespace {

IndexSet positive_part(const Categorical& p0, const IndexSet& support) {
  if (support.empty()) throw Error(ErrorCode::EmptySet, "support is empty");
  std::vector<Token> kept;
  for (Token v : support) {
    if (v >= p0.size()) throw Error(ErrorCode::IndexOutOfRange, "support index " + std::to_string(v) + " outside alphabet");
    if (p0[v] > 0.0) kept.push_back(v);
  }
  if (kept.empty()) throw Error(ErrorCode::ZeroProbabilityOnSupport, "support carries no probability");
  return IndexSet(std::move(kept));
}

double mean_under(const Categorical& pi, const IndexSet& set, std::span<const double> f) {
  double m = 0.0;
  for (Token v : set) m += pi[v] * f[v];
  return m;
}

std::vector<double> log_probs(const Categorical& p0, const IndexSet& set) {
  std::vector<double> lp(p0.size(), 0.0);
  for (Token v : set) lp[v] = std::log(p0[v]);
  return lp;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::OutOfRange, "escort exponent must be positive");
}

}  // namespace

Categorical escort_distribution(const Categorical& p0, const IndexSet& support, double gamma) {
  check_gamma(gamma);
  return temper(p0, 1.0 / gamma, positive_part(p0, support));
}

double escort_sensitivity(const Categorical& p0, const IndexSet& support, double gamma, std::span<const double> f) {
  if (f.size() != p0.size()) throw Error(ErrorCode::InvalidDistribution, "test function length mismatch");
  const IndexSet s = positive_part(p0, support);
  const Categorical pi = escort_distribution(p0, s, gamma);
  const std::vector<double> lp = log_probs(p0, s);
  const double mean_f = mean_under(pi, s, f);
  const double mean_lp = mean_under(pi, s, lp);
  double cov = 0.0;
  for (Token v : s) cov += pi[v] * (f[v] - mean_f) * (lp[v] - mean_lp);
  return cov;
}

double set_mass_log_sensitivity(const Categorical& p0, const IndexSet& support, double gamma, const IndexSet& event) {
  if (event.empty()) throw Error(ErrorCode::EmptyEvent, "event set is empty");
  const IndexSet s = positive_part(p0, support);
  for (Token v : event) {
    if (!support.contains(v)) throw Error(ErrorCode::SupportViolation, "event token " + std::to_string(v) + " outside support");
    if (p0[v] <= 0.0) throw Error(ErrorCode::ZeroProbabilityOnSupport, "event token " + std::to_string(v) + " has zero probability");
  }
  const Categorical pi = escort_distribution(p0, s, gamma);
  const double event_mass = mass(pi, event);
  if (!(event_mass > 0.0)) throw Error(ErrorCode::ZeroMassEvent, "event has no escort mass");
  const std::vector<double> lp = log_probs(p0, s);
  return mean_under(pi, event, lp) / event_mass - mean_under(pi, s, lp);
}

double entropy_temperature_response(const Categorical& p, const IndexSet& support, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::NonPositiveTemperature, "temperature must be positive");
  }
  const IndexSet s = positive_part(p, support);
  const Categorical pi = temper(p, temperature, s);
  const std::vector<double> lp = log_probs(p, s);
  const double mean = mean_under(pi, s, lp);
  double var = 0.0;
  for (Token v : s) var += pi[v] * (lp[v] - mean) * (lp[v] - mean);
  return var / (temperature * temperature * temperature);
}

EntropyBreakdown entropy_decomposition(const Categorical& p_theta, const IndexSet& support) {
  if (support.empty()) throw Error(ErrorCode::EmptySet, "support is empty");
  const std::vector<bool> in = support.mask(p_theta.size());
  double kept = 0.0;
  double off = 0.0;
  for (Token v = 0; v < p_theta.size(); ++v) (in[v] ? kept : off) += p_theta[v];

  EntropyBreakdown out;
  // Tail/head conditionals are formed directly from the raw masses so the
  // terms stay defined when one side is empty.
  auto conditional_entropy = [&](bool inside, double total) {
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (Token v = 0; v < p_theta.size(); ++v) {
      if (in[v] != inside || p_theta[v] <= 0.0) continue;
      const double c = p_theta[v] / total;
      h -= c * std::log(c);
    }
    return h;
  };
  out.gate_entropy = binary_entropy(std::min(std::max(kept, 0.0), 1.0));
  out.head_entropy = kept * conditional_entropy(true, kept);
  out.tail_entropy = off > 0.0 ? off * conditional_entropy(false, off) : 0.0;
  out.total = out.gate_entropy + out.head_entropy + out.tail_entropy;
  return out;
}

std::vector<double> prefix_mass_curve(const Categorical& p, double tau, int k) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::NonPositiveTemperature, "tau must be positive");
  const std::size_t positive = p.support_size();
  if (k < 1 || static_cast<std::size_t>(k) > positive) {
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " but only " + std::to_string(positive) + " tokens carry mass");
  }
  const std::vector<Token> ranking = descending_ranking(p);
  const IndexSet top(std::vector<Token>(ranking.begin(), ranking.begin() + k));
  const Categorical head = temper(p, tau, top);
  std::vector<double> curve(static_cast<std::size_t>(k));
  double cumulative = 0.0;
  for (int m = 0; m < k; ++m) {
    cumulative += head[ranking[static_cast<std::size_t>(m)]];
    curve[static_cast<std::size_t>(m)] = cumulative;
  }
  curve.back() = 1.0;
  return curve;
}

FeasibilityReport feasible_topp_interval(const Categorical& lock_p, int lock_rank, const Categorical& fork_p,
                                         int fork_rank, double tau, int k) {
  if (lock_rank < 1 || fork_rank < 1 || fork_rank > k || lock_rank > k) {
    throw Error(ErrorCode::RankOutOfRange, "ranks must satisfy 1 <= rank <= k");
  }
  const std::vector<double> lock_curve = prefix_mass_curve(lock_p, tau, k);
  const std::vector<double> fork_curve = prefix_mass_curve(fork_p, tau, k);
  FeasibilityReport out;
  out.lower = fork_rank == 1 ? 0.0 : fork_curve[static_cast<std::size_t>(fork_rank - 2)];
  out.upper = lock_curve[static_cast<std::size_t>(lock_rank - 1)];
  out.feasible = out.lower < out.upper;
  out.tau = tau;
  out.k = k;
  return out;
}

}  // namespace ssd
