#include "ssd/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "ssd/error.hpp"

namespace ssd {

namespace {

void check_same_size(const Categorical& p, const Categorical& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::InvalidDistribution,
                "alphabet mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
}

void check_entries(std::span<const double> w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw Error(ErrorCode::InvalidEntry, "entry " + std::to_string(i) + " is " + std::to_string(w[i]));
    }
  }
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::InvalidEntry: return "InvalidEntry";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::ZeroMassSupport: return "ZeroMassSupport";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NormalFormViolation: return "NormalFormViolation";
    case ErrorCode::CompositionViolation: return "CompositionViolation";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::ZeroProbabilityOnSupport: return "ZeroProbabilityOnSupport";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::InvalidRatio: return "InvalidRatio";
    case ErrorCode::EmptyEvent: return "EmptyEvent";
    case ErrorCode::ZeroMassEvent: return "ZeroMassEvent";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyReport: return "EmptyReport";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Categorical

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorCode::InvalidDistribution, "empty probability vector");
  check_entries(probs_);
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > kRenormalizeWindow) {
    throw Error(ErrorCode::InvalidDistribution, "mass " + std::to_string(total) + " is not 1");
  }
  if (total != 1.0) {
    for (double& x : probs_) x /= total;
  }
}

Categorical Categorical::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::InvalidDistribution, "empty alphabet");
  return Categorical(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Categorical Categorical::delta(std::size_t size, Token token) {
  if (token >= size) throw Error(ErrorCode::IndexOutOfRange, "delta token outside alphabet");
  std::vector<double> p(size, 0.0);
  p[token] = 1.0;
  return Categorical(std::move(p));
}

std::size_t Categorical::support_size() const noexcept {
  return static_cast<std::size_t>(std::count_if(probs_.begin(), probs_.end(), [](double x) { return x > 0.0; }));
}

Token Categorical::argmax() const noexcept {
  // max_element returns the first maximal element, which is the lowest index.
  return static_cast<Token>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

// ---------------------------------------------------------------------------
// IndexSet

IndexSet::IndexSet(std::vector<Token> members) : members_(std::move(members)) {
  std::unordered_set<Token> seen;
  for (Token v : members_) {
    if (!seen.insert(v).second) throw Error(ErrorCode::DuplicateIndex, "index " + std::to_string(v) + " repeated");
  }
}

IndexSet IndexSet::range(std::size_t size) {
  std::vector<Token> m(size);
  std::iota(m.begin(), m.end(), Token{0});
  return IndexSet(std::move(m));
}

bool IndexSet::contains(Token v) const noexcept {
  return std::find(members_.begin(), members_.end(), v) != members_.end();
}

std::vector<bool> IndexSet::mask(std::size_t alphabet) const {
  std::vector<bool> m(alphabet, false);
  for (Token v : members_) {
    if (v >= alphabet) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "index " + std::to_string(v) + " outside alphabet of size " + std::to_string(alphabet));
    }
    m[v] = true;
  }
  return m;
}

std::vector<Token> IndexSet::sorted() const {
  std::vector<Token> s = members_;
  std::sort(s.begin(), s.end());
  return s;
}

// ---------------------------------------------------------------------------
// Construction

Categorical normalize(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorCode::AllZero, "no weights");
  check_entries(weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::AllZero, "every weight is zero");
  std::vector<double> p(weights.size());
  std::transform(weights.begin(), weights.end(), p.begin(), [total](double w) { return w / total; });
  return Categorical(std::move(p));
}

Categorical softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::InvalidDistribution, "no logits");
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (std::isnan(z) || z == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::InvalidEntry, "logit is NaN or +inf");
    }
    top = std::max(top, z);
  }
  if (!std::isfinite(top)) throw Error(ErrorCode::AllZero, "every logit is -inf");
  std::vector<double> w(logits.size());
  std::transform(logits.begin(), logits.end(), w.begin(), [top](double z) { return std::exp(z - top); });
  return normalize(w);
}

double mass(const Categorical& p, const IndexSet& set) {
  double m = 0.0;
  for (Token v : set) {
    if (v >= p.size()) throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(v) + " outside alphabet");
    m += p[v];
  }
  return m;
}

Categorical restrict(const Categorical& p, const IndexSet& set) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "restriction set is empty");
  const double m = mass(p, set);
  if (m <= 0.0) throw Error(ErrorCode::ZeroMassSupport, "distribution has no mass on the restriction set");
  // Already supported inside the set: return p untouched so restriction is exactly idempotent.
  const std::vector<bool> in = set.mask(p.size());
  bool inside = true;
  for (Token v = 0; v < p.size() && inside; ++v) inside = in[v] || p[v] == 0.0;
  if (inside) return p;
  std::vector<double> out(p.size(), 0.0);
  for (Token v : set) out[v] = p[v] / m;
  return Categorical(std::move(out));
}

IndexSet positive_support(const Categorical& p) {
  std::vector<Token> m;
  for (Token v = 0; v < p.size(); ++v) {
    if (p[v] > 0.0) m.push_back(v);
  }
  return IndexSet(std::move(m));
}

std::vector<Token> descending_ranking(const Categorical& p) {
  std::vector<Token> order(p.size());
  std::iota(order.begin(), order.end(), Token{0});
  std::stable_sort(order.begin(), order.end(), [&p](Token a, Token b) { return p[a] > p[b]; });
  return order;
}

// ---------------------------------------------------------------------------
// Information measures

double entropy(const Categorical& p) {
  double h = 0.0;
  for (double x : p.probs()) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double renyi_entropy(const Categorical& p, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidOrder, "Renyi order must be positive");
  if (alpha == 1.0) return entropy(p);
  if (std::isinf(alpha)) return -std::log(p[p.argmax()]);
  double s = 0.0;
  for (double x : p.probs()) {
    if (x > 0.0) s += std::pow(x, alpha);
  }
  return std::log(s) / (1.0 - alpha);
}

double kl_divergence(const Categorical& p, const Categorical& q) {
  check_same_size(p, q);
  double d = 0.0;
  for (Token v = 0; v < p.size(); ++v) {
    if (p[v] == 0.0) continue;
    if (q[v] == 0.0) throw Error(ErrorCode::SupportViolation, "p(" + std::to_string(v) + ") > 0 where q is 0");
    d += p[v] * std::log(p[v] / q[v]);
  }
  // Rounding can leave a tiny negative value when p == q.
  return std::max(d, 0.0);
}

double cross_entropy(const Categorical& p, const Categorical& q) {
  check_same_size(p, q);
  double ce = 0.0;
  for (Token v = 0; v < p.size(); ++v) {
    if (p[v] == 0.0) continue;
    if (q[v] == 0.0) throw Error(ErrorCode::SupportViolation, "p(" + std::to_string(v) + ") > 0 where q is 0");
    ce -= p[v] * std::log(q[v]);
  }
  return ce;
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::OutOfRange, "binary entropy argument outside [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

double total_variation(const Categorical& p, const Categorical& q) {
  check_same_size(p, q);
  double tv = 0.0;
  for (Token v = 0; v < p.size(); ++v) tv += std::abs(p[v] - q[v]);
  return 0.5 * tv;
}

}  // namespace ssd
