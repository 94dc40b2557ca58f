#include "ssd/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>

#include "ssd/categorical.hpp"
#include "ssd/cli/config.hpp"
#include "ssd/cli/dump.hpp"
#include "ssd/cli/report.hpp"
#include "ssd/decode.hpp"
#include "ssd/error.hpp"
#include "ssd/objective.hpp"
#include "ssd/random.hpp"
#include "ssd/sensitivity.hpp"
#include "ssd/toyfsm.hpp"

namespace ssd::cli {

namespace {

using toy::Fsm;
using toy::StateKind;

// ---------------------------------------------------------------------------
// Flag parsing helpers. Everything here throws InvalidConfig, which the driver
// maps to the usage exit code.

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

double parse_double(const std::string& text, const std::string& flag) {
  char* end = nullptr;
  const double x = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || !std::isfinite(x)) bad(flag + ": '" + text + "' is not a number");
  return x;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& part : split(text, ',')) out.push_back(parse_double(part, flag));
  return out;
}

std::vector<Token> parse_tokens(const std::string& text, const std::string& flag) {
  std::vector<Token> out;
  for (const std::string& part : split(text, ',')) {
    const double x = parse_double(part, flag);
    if (x < 0.0 || x != std::floor(x)) bad(flag + ": '" + part + "' is not a token index");
    out.push_back(static_cast<Token>(x));
  }
  return out;
}

// "lo:step:hi" (inclusive) or a comma list.
std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  if (text.find(':') == std::string::npos) return parse_list(text, flag);
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 3) bad(flag + ": range must be lo:step:hi");
  const double lo = parse_double(parts[0], flag);
  const double step = parse_double(parts[1], flag);
  const double hi = parse_double(parts[2], flag);
  if (!(step > 0.0) || hi < lo) bad(flag + ": range needs step > 0 and hi >= lo");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  if (n > 1'000'000) bad(flag + ": range has too many points");
  std::vector<double> out;
  // Multiply rather than accumulate so grid points do not drift.
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

void check_temperature(double t, const std::string& flag) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, flag + " must be positive");
}

void check_top_p(double p, const std::string& flag) {
  if (!(p > 0.0 && p <= 1.0)) bad(flag + " must lie in (0, 1]");
}

StateKind parse_kind(const std::string& text) {
  if (text == "root") return StateKind::Root;
  if (text == "fork") return StateKind::Fork;
  if (text == "lock") return StateKind::Lock;
  bad("archetype must be root, fork or lock");
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct Common {
  std::string output = "-";
  std::string format = "csv";
};

struct ToyFlags {
  double tail_ratio = 0.5;
  int locks = 3;
  std::size_t vocab = 16;
  std::string root_head = "0.200,0.190,0.329,0.126";
  std::string fork_head = "0.148,0.280,0.140,0.144";
  std::string lock_head = "0.750,0.055,0.050,0.037";
  double train_temperature = toy::kTrainTemperature;
  double train_top_p = toy::kTrainTopP;

  [[nodiscard]] toy::ToyParams params() const {
    if (locks < 1) bad("--locks must be at least 1");
    toy::ToyParams p;
    p.tail_ratio = tail_ratio;
    p.lock_count = locks;
    p.vocab = vocab;
    p.root_head = parse_list(root_head, "--root-head");
    p.fork_head = parse_list(fork_head, "--fork-head");
    p.lock_head = parse_list(lock_head, "--lock-head");
    return p;
  }
  [[nodiscard]] Fsm teacher() const {
    try {
      return toy::build_toy_fsm(params());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidConfig) throw;
      bad(std::string("toy parameters rejected: ") + e.what());
    }
  }
  void check_training() const {
    check_temperature(train_temperature, "--train-temperature");
    check_top_p(train_top_p, "--train-top-p");
  }
};

struct DistFlags {
  std::string probs;
  std::string logits;
  std::string archetype;
};

struct DecodeFlags {
  double temperature = 1.0;
  int top_k = 0;
  double top_p = 1.0;
  std::string order = "temper,top_k,top_p";

  [[nodiscard]] DecodeConfig config() const {
    DecodeConfig cfg{temperature, top_k, top_p, kStandardOrder};
    try {
      cfg.order = parse_order(order);
    } catch (const Error& e) {
      bad(e.what());
    }
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--output,-o", c.output, "Output path, '-' for stdout");
  sub->add_option("--format", c.format, "csv or json");
}

void add_toy(CLI::App* sub, ToyFlags& t, bool training) {
  sub->add_option("--tail-ratio", t.tail_ratio, "Geometric ratio of archetype tails");
  sub->add_option("--locks", t.locks, "Locks per path");
  sub->add_option("--vocab", t.vocab, "Vocabulary size");
  sub->add_option("--root-head", t.root_head, "Explicit leading root probabilities");
  sub->add_option("--fork-head", t.fork_head, "Explicit leading fork probabilities");
  sub->add_option("--lock-head", t.lock_head, "Explicit leading lock probabilities");
  if (training) {
    sub->add_option("--train-temperature", t.train_temperature, "Temperature used to build student targets");
    sub->add_option("--train-top-p", t.train_top_p, "Top-p used to build student targets");
  }
}

void add_dist(CLI::App* sub, DistFlags& d, ToyFlags& t) {
  sub->add_option("--probs", d.probs, "Comma-separated probabilities");
  sub->add_option("--logits", d.logits, "Comma-separated logits");
  sub->add_option("--archetype", d.archetype, "Toy archetype: root, fork or lock");
  add_toy(sub, t, false);
}

void add_decode(CLI::App* sub, DecodeFlags& d) {
  sub->add_option("--temperature,-t", d.temperature, "Decode temperature");
  sub->add_option("--top-k", d.top_k, "Top-k cutoff, 0 disables");
  sub->add_option("--top-p", d.top_p, "Nucleus threshold, 1 disables");
  sub->add_option("--order", d.order, "Operator order, e.g. temper,top_k,top_p");
}

Categorical load_dist(const DistFlags& d, const ToyFlags& t, const std::string& prefix = "") {
  const int given = !d.probs.empty() + !d.logits.empty() + !d.archetype.empty();
  if (given != 1) bad("give exactly one of --" + prefix + "probs, --" + prefix + "logits" +
                      (prefix.empty() ? ", --archetype" : ""));
  try {
    if (!d.probs.empty()) return Categorical(parse_list(d.probs, "--" + prefix + "probs"));
    if (!d.logits.empty()) return softmax(parse_list(d.logits, "--" + prefix + "logits"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    bad(e.what());
  }
  return t.teacher().state(parse_kind(d.archetype)).arch.dist;
}

Cell num(double x) { return x; }
Cell integer(std::size_t x) { return static_cast<std::int64_t>(x); }

// ---------------------------------------------------------------------------
// Subcommands. Each `prepare` validates every input and returns the compute
// step; only the compute step may fail with exit code 2.

using Job = std::function<Table()>;

struct Command {
  CLI::App* app = nullptr;
  std::function<Job()> prepare;
};

Job prepare_decode(const DistFlags& dist, const ToyFlags& toy, const DecodeFlags& dec, long long samples,
                   std::uint64_t seed) {
  const Categorical p = load_dist(dist, toy);
  const DecodeConfig cfg = dec.config();
  if (samples < 0) bad("--samples must be nonnegative");
  return [=] {
    Categorical operational = p;
    std::vector<bool> retained(p.size(), false);
    if (greedy_guard(cfg.temperature)) {
      operational = Categorical::delta(p.size(), p.argmax());
    } else if (cfg.order == kStandardOrder) {
      operational = retained_support(p, cfg).operational;
    } else {
      operational = decode_normal_form(p, cfg.order, 1.0 / cfg.temperature, cfg.top_k, cfg.top_p).dist;
    }
    for (Token v = 0; v < p.size(); ++v) retained[v] = operational[v] > 0.0;

    std::vector<std::size_t> counts(p.size(), 0);
    RngStream stream(seed, 0);
    for (long long i = 0; i < samples; ++i) ++counts[gumbel_max_sample(operational, stream)];

    Table t{{"token", "base_prob", "operational_prob", "retained", "sampled_count"}, {}};
    for (Token v = 0; v < p.size(); ++v) {
      t.rows.push_back({integer(v), num(p[v]), num(operational[v]), integer(retained[v] ? 1 : 0), integer(counts[v])});
    }
    return t;
  };
}

Job prepare_target(const DistFlags& dist, const ToyFlags& toy, const DecodeFlags& dec) {
  const Categorical p = load_dist(dist, toy);
  const DecodeConfig cfg = dec.config();
  if (cfg.order != kStandardOrder) bad("target uses the standard operator order");
  return [=] {
    const SsdTarget target = ssd_target(p, cfg);
    Table t{{"token", "base_prob", "target_prob", "retained"}, {}};
    for (Token v = 0; v < p.size(); ++v) {
      t.rows.push_back({integer(v), num(p[v]), num(target.q[v]), integer(target.support.contains(v) ? 1 : 0)});
    }
    return t;
  };
}

std::vector<Cell> decomposition_row(std::size_t step, const LossBreakdown& l, double tv, double off) {
  return {integer(step), num(l.total), num(l.gate), num(l.reshape), num(l.align), num(tv), num(off)};
}

Job prepare_decompose(const DistFlags& dist, const ToyFlags& toy, const DecodeFlags& dec, const DistFlags& student) {
  const Categorical p = load_dist(dist, toy);
  const DecodeConfig cfg = dec.config();
  if (cfg.order != kStandardOrder) bad("decompose uses the standard operator order");
  std::optional<Categorical> theta;
  if (!student.probs.empty() || !student.logits.empty()) theta = load_dist(student, toy, "student-");
  if (theta && theta->size() != p.size()) bad("student and teacher alphabets differ");
  return [=] {
    const SsdTarget target = ssd_target(p, cfg);
    const Categorical s = theta.value_or(p);
    const LossBreakdown l = three_term_decomposition(target, s);
    const double kept = kept_mass(s, target.support);
    const double tv = total_variation(restrict(s, target.support), target.q);
    return Table{kDecompositionColumns, {decomposition_row(0, l, tv, 1.0 - kept)}};
  };
}

Job prepare_train(const DistFlags& dist, const ToyFlags& toy, const DecodeFlags& dec, const TrainOptions& opts) {
  const Categorical p = load_dist(dist, toy);
  const DecodeConfig cfg = dec.config();
  if (cfg.order != kStandardOrder) bad("train-student uses the standard operator order");
  if (!(opts.learning_rate > 0.0)) bad("--learning-rate must be positive");
  if (!(opts.tv_tolerance > 0.0)) bad("--tv-tolerance must be positive");
  if (opts.record_every < 1) bad("--record-every must be at least 1");
  return [=] {
    const TrainResult r = train_local_student(p, cfg, opts);
    Table t{kDecompositionColumns, {}};
    for (const TrajectoryRow& row : r.trajectory) {
      t.rows.push_back(decomposition_row(row.step, row.loss, row.on_support_tv, row.off_support_mass));
    }
    return t;
  };
}

struct SensitivityFlags {
  std::string mode = "entropy";
  std::string support;
  std::string event;
  std::string tau_grid = "0.25,0.5,1,2,4";
  int k = 0;
  int lock_rank = 1;
  int fork_rank = 2;
};

Job prepare_sensitivity(const DistFlags& dist, const ToyFlags& toy, const DecodeFlags& dec,
                        const SensitivityFlags& f) {
  const std::vector<double> taus = parse_grid(f.tau_grid, "--tau-grid");
  for (double tau : taus) check_temperature(tau, "--tau-grid");

  if (f.mode == "feasibility") {
    const Fsm fsm = toy.teacher();
    const Categorical lock = fsm.state(StateKind::Lock).arch.dist;
    const Categorical fork = fsm.state(StateKind::Fork).arch.dist;
    const int k = f.k == 0 ? static_cast<int>(fsm.vocab) : f.k;
    if (k < 1 || f.lock_rank < 1 || f.fork_rank < 1 || f.lock_rank > k || f.fork_rank > k) {
      bad("ranks and --k must satisfy 1 <= rank <= k");
    }
    return [=] {
      Table t{{"tau", "k", "lower", "upper", "feasible"}, {}};
      for (double tau : taus) {
        const FeasibilityReport r = feasible_topp_interval(lock, f.lock_rank, fork, f.fork_rank, tau, k);
        t.rows.push_back({num(tau), integer(static_cast<std::size_t>(k)), num(r.lower), num(r.upper),
                          integer(r.feasible ? 1 : 0)});
      }
      return t;
    };
  }

  const Categorical p = load_dist(dist, toy);
  if (f.mode == "prefix") {
    const int k = f.k == 0 ? static_cast<int>(p.support_size()) : f.k;
    if (k < 1) bad("--k must be positive");
    return [=] {
      Table t{{"tau", "m", "prefix_mass"}, {}};
      for (double tau : taus) {
        const std::vector<double> curve = prefix_mass_curve(p, tau, k);
        for (std::size_t m = 0; m < curve.size(); ++m) t.rows.push_back({num(tau), integer(m + 1), num(curve[m])});
      }
      return t;
    };
  }
  if (f.mode != "entropy") bad("--mode must be entropy, prefix or feasibility");

  std::optional<IndexSet> support;
  if (!f.support.empty()) {
    try {
      support = IndexSet(parse_tokens(f.support, "--support"));
      static_cast<void>(support->mask(p.size()));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidConfig) throw;
      bad(e.what());
    }
  }
  const DecodeConfig cfg = dec.config();
  std::optional<IndexSet> event;
  if (!f.event.empty()) event = IndexSet(parse_tokens(f.event, "--event"));
  return [=] {
    const IndexSet s = support ? *support : retained_support(p, cfg).support;
    const IndexSet a = event ? *event : IndexSet({s[0]});
    Table t{{"tau", "gamma", "head_entropy", "entropy_response", "event_mass", "event_log_sensitivity"}, {}};
    for (double tau : taus) {
      const double gamma = 1.0 / tau;
      const Categorical pi = escort_distribution(p, s, gamma);
      t.rows.push_back({num(tau), num(gamma), num(entropy(pi)), num(entropy_temperature_response(p, s, tau)),
                        num(mass(pi, a)), num(set_mass_log_sensitivity(p, s, gamma, a))});
    }
    return t;
  };
}

Job prepare_sweep(const ToyFlags& toy, const std::string& grid, double top_p) {
  const std::vector<double> ts = parse_grid(grid, "--t-grid");
  for (double t : ts) check_temperature(t, "--t-grid");
  check_top_p(top_p, "--top-p");
  toy.check_training();
  const Fsm teacher = toy.teacher();
  return [=] {
    const Fsm student = toy::distill_fsm(teacher, toy.train_temperature, toy.train_top_p);
    Table t{kSweepColumns, {}};
    for (const toy::SweepRow& r : toy::temperature_sweep(teacher, student, ts, top_p)) {
      t.rows.push_back({num(r.temperature), num(r.top_p), num(r.teacher_success), num(r.student_success), num(r.gap)});
    }
    return t;
  };
}

std::vector<std::string> parse_roles(const std::string& role) {
  if (role == "both") return {"teacher", "student"};
  if (role == "teacher" || role == "student") return {role};
  bad("--role must be teacher, student or both");
}

void check_bounds(double lo, double hi) {
  check_temperature(lo, "--t-lo");
  if (!(hi > lo)) bad("--t-hi must exceed --t-lo");
}

Job prepare_optimize(const ToyFlags& toy, const std::string& role, double top_p, double lo, double hi) {
  const std::vector<std::string> roles = parse_roles(role);
  check_top_p(top_p, "--top-p");
  check_bounds(lo, hi);
  toy.check_training();
  const Fsm teacher = toy.teacher();
  return [=] {
    const Fsm student = toy::distill_fsm(teacher, toy.train_temperature, toy.train_top_p);
    Table t{{"role", "top_p", "t_star", "p_star"}, {}};
    for (const std::string& r : roles) {
      const toy::Optimum o = toy::optimize_temperature(r == "teacher" ? teacher : student, top_p, lo, hi);
      t.rows.push_back({r, num(top_p), num(o.t_star), num(o.p_star)});
    }
    return t;
  };
}

Job prepare_grid(const ToyFlags& toy, const std::string& list, double lo, double hi) {
  const std::vector<double> tops = parse_list(list, "--top-p");
  for (double p : tops) check_top_p(p, "--top-p");
  check_bounds(lo, hi);
  toy.check_training();
  const Fsm teacher = toy.teacher();
  return [=] {
    const Fsm student = toy::distill_fsm(teacher, toy.train_temperature, toy.train_top_p);
    Table t{{"top_p", "teacher_t_star", "teacher_p_star", "student_t_star", "student_p_star", "gap_pp"}, {}};
    for (const toy::RobustnessRow& r : toy::topp_robustness_grid(teacher, student, tops, lo, hi)) {
      t.rows.push_back({num(r.top_p), num(r.teacher.t_star), num(r.teacher.p_star), num(r.student.t_star),
                        num(r.student.p_star), num(r.gap_pp)});
    }
    return t;
  };
}

Job prepare_mc(const ToyFlags& toy, const std::string& role, std::optional<double> temperature, double top_p,
               double n, std::uint64_t seed, unsigned threads) {
  const std::vector<std::string> roles = parse_roles(role);
  if (temperature) check_temperature(*temperature, "--temperature");
  check_top_p(top_p, "--top-p");
  if (!(n >= 1.0) || n != std::floor(n) || n > 1e12) bad("--n must be a positive integer");
  toy.check_training();
  const Fsm teacher = toy.teacher();
  return [=] {
    const Fsm student = toy::distill_fsm(teacher, toy.train_temperature, toy.train_top_p);
    Table t{{"role", "temperature", "top_p", "n", "estimate", "stderr", "exact"}, {}};
    for (const std::string& r : roles) {
      const Fsm& fsm = r == "teacher" ? teacher : student;
      const double temp = temperature ? *temperature : toy::optimize_temperature(fsm, top_p).t_star;
      const toy::MonteCarloResult mc =
          toy::monte_carlo_success(fsm, temp, top_p, static_cast<std::uint64_t>(n), seed, threads);
      t.rows.push_back({r, num(temp), num(top_p), integer(mc.n), num(mc.estimate), num(mc.standard_error),
                        num(toy::exact_success(fsm, temp, top_p))});
    }
    return t;
  };
}

Job prepare_dump(const std::string& path, bool skip_bad, const DecodeFlags& dec, std::ostream& err) {
  if (path.empty()) bad("--dump is required");
  const DecodeConfig cfg = dec.config();
  if (cfg.order != kStandardOrder) bad("analyze-dump uses the standard operator order");
  DumpLoad load = ingest_dump(path, skip_bad);
  for (const DumpIssue& issue : load.skipped) {
    err << "warning: skipped line " << issue.line << ": " << issue.message << '\n';
  }
  return [records = std::move(load.records), cfg] { return dump_table(records, cfg); };
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  try {
    args = expand_config(std::move(args));
  } catch (const Error& e) {
    err << "ssd_lab: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"Decoding, self-distillation and toy-model analyses"};
  app.name("ssd_lab");
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  DistFlags dist;
  DistFlags student;
  ToyFlags toy;
  DecodeFlags dec;
  long long samples = 0;
  std::uint64_t seed = 12345;
  TrainOptions train;
  train.record_every = 1000;
  train.max_steps = 5'000'000;
  SensitivityFlags sens;
  std::string t_grid = "0.1:0.05:3";
  double sweep_top_p = toy::kEvalTopP;
  std::string role = "both";
  double t_lo = toy::kOptimizerLow;
  double t_hi = toy::kOptimizerHigh;
  std::string grid_top_p = "0.65,0.70,0.75,0.80,0.85,0.90";
  double mc_temperature = 0.0;
  double mc_n = 1e6;
  unsigned threads = 0;
  std::string dump_path;
  bool skip_bad = false;

  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    return sub;
  };

  {
    CLI::App* sub = add("decode", "Operational decoding distribution and optional Gumbel-max samples");
    add_dist(sub, dist, toy);
    add_decode(sub, dec);
    sub->add_option("--samples", samples, "Number of samples to draw");
    sub->add_option("--seed", seed, "Sampling seed");
    commands.push_back({sub, [&] { return prepare_decode(dist, toy, dec, samples, seed); }});
  }
  {
    CLI::App* sub = add("target", "Self-distillation training target");
    add_dist(sub, dist, toy);
    add_decode(sub, dec);
    commands.push_back({sub, [&] { return prepare_target(dist, toy, dec); }});
  }
  {
    CLI::App* sub = add("decompose", "Gate / reshape / align decomposition of the target cross-entropy");
    add_dist(sub, dist, toy);
    add_decode(sub, dec);
    sub->add_option("--student-probs", student.probs, "Student probabilities (default: the teacher)");
    sub->add_option("--student-logits", student.logits, "Student logits");
    commands.push_back({sub, [&] { return prepare_decompose(dist, toy, dec, student); }});
  }
  {
    CLI::App* sub = add("train-student", "Gradient descent of a free-logit student on the target");
    add_dist(sub, dist, toy);
    add_decode(sub, dec);
    sub->add_option("--learning-rate", train.learning_rate, "Step size");
    sub->add_option("--max-steps", train.max_steps, "Step budget");
    sub->add_option("--tv-tolerance", train.tv_tolerance, "Stop once on-support TV falls below this");
    sub->add_option("--record-every", train.record_every, "Trajectory stride");
    commands.push_back({sub, [&] { return prepare_train(dist, toy, dec, train); }});
  }
  {
    CLI::App* sub = add("sensitivity", "Escort entropy response, prefix-mass curves, top-p feasibility");
    add_dist(sub, dist, toy);
    add_decode(sub, dec);
    sub->add_option("--mode", sens.mode, "entropy, prefix or feasibility");
    sub->add_option("--support", sens.support, "Support tokens (default: retained support)");
    sub->add_option("--event", sens.event, "Event tokens (default: top support token)");
    sub->add_option("--tau-grid", sens.tau_grid, "Evaluation temperatures");
    sub->add_option("--k", sens.k, "Prefix length (default: full positive support)");
    sub->add_option("--lock-rank", sens.lock_rank, "Rank of the correct lock token");
    sub->add_option("--fork-rank", sens.fork_rank, "Rank of the correct fork token");
    commands.push_back({sub, [&] { return prepare_sensitivity(dist, toy, dec, sens); }});
  }
  {
    CLI::App* sub = add("toy-sweep", "Teacher and student success over a temperature grid");
    add_toy(sub, toy, true);
    sub->add_option("--t-grid", t_grid, "lo:step:hi or comma list");
    sub->add_option("--top-p", sweep_top_p, "Evaluation top-p");
    commands.push_back({sub, [&] { return prepare_sweep(toy, t_grid, sweep_top_p); }});
  }
  {
    CLI::App* sub = add("toy-optimize", "Optimal evaluation temperature");
    add_toy(sub, toy, true);
    sub->add_option("--role", role, "teacher, student or both");
    sub->add_option("--top-p", sweep_top_p, "Evaluation top-p");
    sub->add_option("--t-lo", t_lo, "Lower temperature bound");
    sub->add_option("--t-hi", t_hi, "Upper temperature bound");
    commands.push_back({sub, [&] { return prepare_optimize(toy, role, sweep_top_p, t_lo, t_hi); }});
  }
  {
    CLI::App* sub = add("toy-grid", "Optimal temperatures and gaps over a list of top-p values");
    add_toy(sub, toy, true);
    sub->add_option("--top-p", grid_top_p, "Comma list of evaluation top-p values");
    sub->add_option("--t-lo", t_lo, "Lower temperature bound");
    sub->add_option("--t-hi", t_hi, "Upper temperature bound");
    commands.push_back({sub, [&] { return prepare_grid(toy, grid_top_p, t_lo, t_hi); }});
  }
  CLI::Option* mc_temp_opt = nullptr;
  {
    CLI::App* sub = add("toy-mc", "Monte Carlo trajectory simulation against the exact success probability");
    add_toy(sub, toy, true);
    sub->add_option("--role", role, "teacher, student or both");
    mc_temp_opt = sub->add_option("--temperature,-t", mc_temperature, "Temperature (default: the role's optimum)");
    sub->add_option("--top-p", sweep_top_p, "Evaluation top-p");
    sub->add_option("--n", mc_n, "Trajectories per role");
    sub->add_option("--seed", seed, "Simulation seed");
    sub->add_option("--threads", threads, "Worker threads, 0 for hardware concurrency");
    commands.push_back({sub, [&] {
                          const std::optional<double> t =
                              mc_temp_opt->count() ? std::optional<double>(mc_temperature) : std::nullopt;
                          return prepare_mc(toy, role, t, sweep_top_p, mc_n, seed, threads);
                        }});
  }
  {
    CLI::App* sub = add("analyze-dump", "Survivor counts and entropies for externally produced distributions");
    add_decode(sub, dec);
    sub->add_option("--dump", dump_path, "Line-delimited JSON dump");
    sub->add_flag("--skip-bad", skip_bad, "Skip malformed lines instead of aborting");
    commands.push_back({sub, [&] { return prepare_dump(dump_path, skip_bad, dec, err); }});
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // Help requests surface as parse errors with a zero exit code.
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  const auto selected = std::find_if(commands.begin(), commands.end(), [](const Command& c) { return c.app->parsed(); });
  if (selected == commands.end()) {
    err << "ssd_lab: no subcommand\n";
    return kExitUsage;
  }

  Job job;
  Format format = Format::Csv;
  try {
    format = parse_format(common.format);
    job = selected->prepare();
  } catch (const Error& e) {
    err << "ssd_lab: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    emit_report(job(), format, common.output, out);
  } catch (const std::exception& e) {
    err << "ssd_lab: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitOk;
}

}  // namespace ssd::cli
