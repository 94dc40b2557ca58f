#include "ssd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ssd/error.hpp"
#include "ssd/random.hpp"

namespace ssd {

namespace {

constexpr double kLogitFloor = -50.0;

void check_positive_on_target(const SsdTarget& target, const Categorical& p_theta) {
  if (p_theta.size() != target.q.size()) throw Error(ErrorCode::InvalidDistribution, "student alphabet mismatch");
  for (Token v = 0; v < target.q.size(); ++v) {
    if (target.q[v] > 0.0 && p_theta[v] <= 0.0) {
      throw Error(ErrorCode::ZeroMassSupport, "student assigns zero mass to target token " + std::to_string(v));
    }
  }
}

// Softmax into a caller-owned buffer; the training loop runs millions of steps.
void softmax_into(std::span<const double> z, std::vector<double>& out) {
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - top);
    total += out[i];
  }
  for (double& x : out) x /= total;
}

}  // namespace

SsdTarget ssd_target(const Categorical& p0, const DecodeConfig& cfg) {
  RetainedSupport rs = retained_support(p0, cfg);
  Categorical q = restrict(temper(p0, cfg.temperature), rs.support);
  return {std::move(rs.support), std::move(q), cfg.temperature, p0};
}

double kept_mass(const Categorical& p_theta, const IndexSet& support) {
  if (support.empty()) throw Error(ErrorCode::EmptySet, "retained support is empty");
  return std::min(mass(p_theta, support), 1.0);
}

GateConditional gate_conditional_split(const SsdTarget& target, const Categorical& p_theta) {
  check_positive_on_target(target, p_theta);
  const double kept = kept_mass(p_theta, target.support);
  const Categorical conditional = restrict(p_theta, target.support);
  return {-std::log(kept), cross_entropy(target.q, conditional)};
}

LossBreakdown three_term_decomposition(const SsdTarget& target, const Categorical& p_theta) {
  const double t = target.train_temperature;
  const GateConditional gc = gate_conditional_split(target, p_theta);
  const Categorical conditional = restrict(p_theta, target.support);

  LossBreakdown out;
  out.gate = gc.gate;
  if (t != 1.0) {
    // Free-energy form of (1 - T) H_{1/T}.
    double partition = 0.0;
    for (Token v : target.support) partition += std::pow(conditional[v], 1.0 / t);
    out.reshape = -t * std::log(partition);
  }
  out.align = t * kl_divergence(target.q, temper(conditional, t, target.support));
  out.constant = t * entropy(target.q);
  out.total = out.gate + out.reshape + out.align + out.constant;
  return out;
}

std::vector<double> loss_gradient_logits(const SsdTarget& target, std::span<const double> logits) {
  if (logits.size() != target.q.size()) throw Error(ErrorCode::InvalidDistribution, "logit length mismatch");
  const Categorical p = softmax(logits);
  const std::vector<bool> in = target.support.mask(p.size());
  double off = 0.0;
  for (Token v = 0; v < p.size(); ++v) {
    if (!in[v]) off += p[v];
  }
  const double kept = 1.0 - off;
  std::vector<double> grad(p.size());
  for (Token v = 0; v < p.size(); ++v) {
    if (in[v]) {
      const double cond = p[v] / kept;
      grad[v] = -off * cond + (cond - target.q[v]);
    } else {
      grad[v] = p[v];
    }
  }
  return grad;
}

double self_training_fixed_point_check(const Categorical& p, int n_trials) {
  if (n_trials < 0) throw Error(ErrorCode::OutOfRange, "n_trials must be >= 0");
  const std::size_t n = p.size();
  RngStream stream(0x5e1f7a11u, 0);
  double worst = 0.0;
  std::vector<double> z(n);
  for (int trial = 0; trial <= n_trials; ++trial) {
    const double shift = trial == 0 ? 0.0 : 20.0 * stream.uniform_open_closed() - 10.0;
    for (Token v = 0; v < n; ++v) z[v] = p[v] > 0.0 ? std::log(p[v]) + shift : -std::numeric_limits<double>::infinity();
    const Categorical model = softmax(z);

    // sum_v p(v) (e_v - p): the expected score of the softmax parameterization.
    for (Token u = 0; u < n; ++u) {
      double g = 0.0;
      for (Token v = 0; v < n; ++v) g += model[v] * ((u == v ? 1.0 : 0.0) - model[u]);
      worst = std::max(worst, std::abs(g));
    }

    const SsdTarget self{IndexSet::range(n), model, 1.0, model};
    for (Token v = 0; v < n; ++v) z[v] = model[v] > 0.0 ? std::log(model[v]) : -std::numeric_limits<double>::infinity();
    for (double g : loss_gradient_logits(self, z)) worst = std::max(worst, std::abs(g));
  }
  return worst;
}

TrainResult train_local_student(const Categorical& p0, const DecodeConfig& cfg, const TrainOptions& opts) {
  if (!(opts.learning_rate > 0.0) || !std::isfinite(opts.learning_rate)) {
    throw Error(ErrorCode::OutOfRange, "learning rate must be positive");
  }
  if (!(opts.tv_tolerance > 0.0)) throw Error(ErrorCode::OutOfRange, "tv tolerance must be positive");
  const std::size_t stride = std::max<std::size_t>(opts.record_every, 1);

  TrainResult result{ssd_target(p0, cfg), {}, {}, false, true};
  const SsdTarget& target = result.target;
  const std::size_t n = p0.size();
  const std::vector<bool> in = target.support.mask(n);
  const bool truncated = target.support.size() < n;

  std::vector<double> z(n);
  for (Token v = 0; v < n; ++v) z[v] = p0[v] > 0.0 ? std::max(std::log(p0[v]), kLogitFloor) : kLogitFloor;

  std::vector<double> p(n);
  double prev_off = 2.0;
  double prev_loss = std::numeric_limits<double>::infinity();
  std::size_t rising = 0;

  auto capture = [&](std::size_t step, double tv, double off) {
    result.trajectory.push_back({step, three_term_decomposition(target, Categorical(p)), tv, off});
  };

  for (std::size_t step = 0;; ++step) {
    softmax_into(z, p);
    double off = 0.0;
    for (Token v = 0; v < n; ++v) {
      if (!in[v]) off += p[v];
    }
    const double kept = 1.0 - off;
    double tv = 0.0;
    double loss = 0.0;
    for (Token v : target.support) {
      tv += std::abs(p[v] / kept - target.q[v]);
      if (target.q[v] > 0.0) loss -= target.q[v] * std::log(p[v]);
    }
    tv *= 0.5;

    if (truncated && step > 0 && !(off < prev_off)) result.off_support_strictly_decreasing = false;
    rising = loss > prev_loss ? rising + 1 : 0;
    if (rising >= opts.divergence_window) {
      throw Error(ErrorCode::Divergence, "loss rose for " + std::to_string(rising) + " consecutive steps at step " +
                                             std::to_string(step));
    }
    prev_off = off;
    prev_loss = loss;

    const bool done = tv < opts.tv_tolerance;
    const bool last = done || step >= opts.max_steps;
    if (step % stride == 0 || last) capture(step, tv, off);
    if (last) {
      result.converged = done;
      result.final_state = {z, step, tv, off};
      return result;
    }

    // Softmax cross-entropy gradient in its split form.
    for (Token v = 0; v < n; ++v) {
      const double g = in[v] ? -off * (p[v] / kept) + (p[v] / kept - target.q[v]) : p[v];
      z[v] -= opts.learning_rate * g;
    }
  }
}

Categorical ideal_fit_eval(const SsdTarget& target, double tau) {
  Categorical student = temper(target.q, tau);
  const Categorical teacher = temper(target.source, target.train_temperature * tau, target.support);
  for (Token v = 0; v < student.size(); ++v) {
    if (std::abs(student[v] - teacher[v]) > 1e-12) {
      throw Error(ErrorCode::CompositionViolation,
                  "tempered target and product-temperature teacher differ at token " + std::to_string(v));
    }
  }
  return student;
}

LocalGain local_gain(const Categorical& p0, const DecodeConfig& cfg, double tau, const IndexSet& event) {
  if (event.empty()) throw Error(ErrorCode::EmptyEvent, "event set is empty");
  const SsdTarget target = ssd_target(p0, cfg);
  for (Token v : event) {
    if (!target.support.contains(v)) {
      throw Error(ErrorCode::SupportViolation, "event token " + std::to_string(v) + " is outside the retained support");
    }
  }
  const double t_train = target.train_temperature;
  const Categorical base_at_tau = temper(p0, tau);
  const double retained = mass(base_at_tau, target.support);
  const double escort_eval = mass(temper(p0, tau, target.support), event);
  if (!(escort_eval > 0.0)) throw Error(ErrorCode::ZeroMassEvent, "event has no mass inside the retained support");
  const double escort_student = mass(temper(p0, t_train * tau, target.support), event);

  LocalGain out;
  out.support_gain = 1.0 / retained;
  out.reshape_gain = t_train == 1.0 ? 1.0 : escort_student / escort_eval;
  out.base_prob = mass(base_at_tau, event);
  out.student_prob = mass(ideal_fit_eval(target, tau), event);
  return out;
}

}  // namespace ssd
