#pragma once

// The self-distillation target at a single context, the exact factorizations
// of its cross-entropy objective, the logit-level gradient, and a local
// softmax student trained by full-batch gradient descent.

#include <cstddef>
#include <vector>

#include "ssd/categorical.hpp"
#include "ssd/decode.hpp"

namespace ssd {

/// Tempered teacher restricted to its retained support and renormalized.
struct SsdTarget {
  IndexSet support;
  Categorical q;
  double train_temperature = 1.0;
  Categorical source;
};

/// Gate / reshape / align / constant split of CE(q, p_theta). All in nats.
struct LossBreakdown {
  double gate = 0.0;     // -log KeptMass
  double reshape = 0.0;  // (1 - T) H_{1/T}(p_theta(. | S)), free-energy form
  double align = 0.0;    // T KL(q || Temper_T[p_theta(. | S)])
  double constant = 0.0; // T H(q)
  double total = 0.0;
};

struct GateConditional {
  double gate = 0.0;
  double conditional = 0.0;
};

SsdTarget ssd_target(const Categorical& p0, const DecodeConfig& cfg);

double kept_mass(const Categorical& p_theta, const IndexSet& support);

/// Throws ZeroMassSupport if p_theta vanishes on a q-positive token.
GateConditional gate_conditional_split(const SsdTarget& target, const Categorical& p_theta);

LossBreakdown three_term_decomposition(const SsdTarget& target, const Categorical& p_theta);

/// dCE(q, softmax(z))/dz written as the support-transfer + within-support
/// fitting split on S and +p_theta(v) off S.
std::vector<double> loss_gradient_logits(const SsdTarget& target, std::span<const double> logits);

/// Max-norm of the expected score E_{v~p}[grad_z log softmax(z)(v)] at
/// z = log p + c, for c = 0 and `n_trials` further random gauge shifts c.
/// Also folds in the self-target gradient from loss_gradient_logits.
double self_training_fixed_point_check(const Categorical& p, int n_trials);

struct TrainOptions {
  double learning_rate = 0.5;
  std::size_t max_steps = 5'000'000;
  double tv_tolerance = 1e-6;
  std::size_t record_every = 1;     // trajectory stride; first and last steps always kept
  std::size_t divergence_window = 100;
};

struct TrajectoryRow {
  std::size_t step = 0;
  LossBreakdown loss;
  double on_support_tv = 0.0;
  double off_support_mass = 0.0;
};

struct StudentState {
  std::vector<double> logits;
  std::size_t step = 0;
  double on_support_tv = 0.0;
  double off_support_mass = 0.0;
};

struct TrainResult {
  SsdTarget target;
  StudentState final_state;
  std::vector<TrajectoryRow> trajectory;
  bool converged = false;
  /// Off-support mass fell strictly at every step (checked on every step, not only recorded rows).
  bool off_support_strictly_decreasing = true;
};

/// Logits start at log p0 (zeros floored at -50). Throws Divergence when the
/// total loss rises for `divergence_window` consecutive steps.
TrainResult train_local_student(const Categorical& p0, const DecodeConfig& cfg, const TrainOptions& opts = {});

/// Student at evaluation temperature tau under the ideal fit p_theta = q:
/// temper(q, tau), checked against the teacher restricted to S at T_train * tau.
/// Throws CompositionViolation if the two disagree beyond 1e-12.
Categorical ideal_fit_eval(const SsdTarget& target, double tau);

struct LocalGain {
  double support_gain = 1.0;  // 1 / m_s(tau)
  double reshape_gain = 1.0;  // escort ratio
  double base_prob = 0.0;     // p_{0,tau}(A)
  double student_prob = 0.0;  // q_{s,tau}(A)
};

LocalGain local_gain(const Categorical& p0, const DecodeConfig& cfg, double tau, const IndexSet& event);

}  // namespace ssd
