#pragma once

// Temperature sensitivity inside a fixed support: escort distributions and
// their covariance identities, entropy response, the gate/head/tail entropy
// split, prefix-mass curves, and the lock/fork top-p feasibility window.
//
// Escort computations drop zero-probability tokens from the support first
// (log p0 is undefined there); an event that names such a token is an error.

#include <span>
#include <vector>

#include "ssd/categorical.hpp"

namespace ssd {

struct EntropyBreakdown {
  double gate_entropy = 0.0;  // h2(KeptMass)
  double head_entropy = 0.0;  // KeptMass * H(p | S)
  double tail_entropy = 0.0;  // (1 - KeptMass) * H(p | S^c)
  double total = 0.0;
};

struct FeasibilityReport {
  double lower = 0.0;  // fork prefix mass at rank r_F - 1
  double upper = 0.0;  // lock prefix mass at rank r_L
  bool feasible = false;
  double tau = 1.0;
  int k = 0;
};

/// pi_gamma(v) proportional to 1{v in S} p0(v)^gamma.
Categorical escort_distribution(const Categorical& p0, const IndexSet& support, double gamma);

/// d/dgamma E_{pi_gamma}[f] = Cov_{pi_gamma}(f, log p0).
double escort_sensitivity(const Categorical& p0, const IndexSet& support, double gamma, std::span<const double> f);

/// d/dgamma log pi_gamma(A) = E_{pi_gamma(.|A)}[log p0] - E_{pi_gamma}[log p0].
double set_mass_log_sensitivity(const Categorical& p0, const IndexSet& support, double gamma, const IndexSet& event);

/// dH/dT of temper(restrict(p, S), T): Var(log p) / T^3 under the tempered head.
double entropy_temperature_response(const Categorical& p, const IndexSet& support, double temperature);

EntropyBreakdown entropy_decomposition(const Categorical& p_theta, const IndexSet& support);

/// S_{s,m}(tau, k) for m = 1..k over the descending ranking of p.
std::vector<double> prefix_mass_curve(const Categorical& p, double tau, int k);

/// Ranks are 1-based positions in each distribution's own descending ranking.
FeasibilityReport feasible_topp_interval(const Categorical& lock_p, int lock_rank, const Categorical& fork_p,
                                         int fork_rank, double tau, int k);

}  // namespace ssd
