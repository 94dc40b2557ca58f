#pragma once

// Finite categorical distributions over a token alphabet {0, ..., V-1}.
//
// All logarithms are natural (nats). The conventions 0 log 0 = 0 and
// 0 log(0/q) = 0 are applied by branching on exact zeros; nothing is floored.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ssd {

using Token = std::size_t;

/// Tolerance on the total mass of a stored distribution.
inline constexpr double kSumTolerance = 1e-12;
/// Inputs whose mass is within this of 1 are renormalized once on construction.
inline constexpr double kRenormalizeWindow = 1e-9;

/// A validated probability vector. Immutable after construction.
class Categorical {
 public:
  /// Throws InvalidEntry on negative or non-finite entries and
  /// InvalidDistribution when the mass is not within 1e-9 of one.
  explicit Categorical(std::vector<double> probs);
  Categorical(std::initializer_list<double> probs) : Categorical(std::vector<double>(probs)) {}

  static Categorical uniform(std::size_t size);
  /// A point mass on `token`.
  static Categorical delta(std::size_t size, Token token);

  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] double operator[](Token v) const { return probs_[v]; }
  [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }
  [[nodiscard]] const std::vector<double>& vector() const noexcept { return probs_; }

  /// Number of strictly positive entries.
  [[nodiscard]] std::size_t support_size() const noexcept;
  /// Highest-probability token; ties go to the lowest index.
  [[nodiscard]] Token argmax() const noexcept;

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  std::vector<double> probs_;
};

/// An ordered set of distinct token indices. Order is significant to callers
/// that store rank order (retained supports), not to membership queries.
class IndexSet {
 public:
  IndexSet() = default;
  /// Throws DuplicateIndex on repeated members.
  explicit IndexSet(std::vector<Token> members);
  IndexSet(std::initializer_list<Token> members) : IndexSet(std::vector<Token>(members)) {}

  /// {0, ..., size-1}.
  static IndexSet range(std::size_t size);

  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
  [[nodiscard]] bool contains(Token v) const noexcept;
  [[nodiscard]] const std::vector<Token>& members() const noexcept { return members_; }
  [[nodiscard]] auto begin() const noexcept { return members_.begin(); }
  [[nodiscard]] auto end() const noexcept { return members_.end(); }
  [[nodiscard]] Token operator[](std::size_t i) const { return members_[i]; }

  /// Dense 0/1 mask of length `alphabet`; throws IndexOutOfRange if a member does not fit.
  [[nodiscard]] std::vector<bool> mask(std::size_t alphabet) const;
  /// Members sorted ascending; equality of sets ignores stored order.
  [[nodiscard]] std::vector<Token> sorted() const;
  [[nodiscard]] bool same_members(const IndexSet& other) const { return sorted() == other.sorted(); }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<Token> members_;
};

Categorical normalize(std::span<const double> weights);
inline Categorical normalize(const std::vector<double>& weights) {
  return normalize(std::span<const double>(weights));
}
/// Numerically stable softmax; -inf logits map to exact zeros.
Categorical softmax(std::span<const double> logits);

/// Total mass of `p` on `set`.
double mass(const Categorical& p, const IndexSet& set);
/// pi(v | K): `p` conditioned on `set`, zero elsewhere.
Categorical restrict(const Categorical& p, const IndexSet& set);
/// Indices with strictly positive mass, ascending.
IndexSet positive_support(const Categorical& p);
/// Token indices sorted by descending probability, lowest index first among ties.
std::vector<Token> descending_ranking(const Categorical& p);

double entropy(const Categorical& p);
/// Renyi entropy of order alpha. alpha == 1 returns the Shannon entropy and
/// alpha == +inf the min-entropy. Throws InvalidOrder for alpha <= 0 or NaN.
double renyi_entropy(const Categorical& p, double alpha);
double kl_divergence(const Categorical& p, const Categorical& q);
double cross_entropy(const Categorical& p, const Categorical& q);
double binary_entropy(double x);
double total_variation(const Categorical& p, const Categorical& q);

}  // namespace ssd
