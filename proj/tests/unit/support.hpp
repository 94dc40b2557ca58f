#pragma once

// Shared generators for the randomized suites.

#include <cmath>
#include <algorithm>
#include <random>
#include <vector>

#include "ssd/categorical.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Log-uniform weights give a wide spread of magnitudes; `zero_chance` knocks entries
// out (at least one entry always survives).
inline ssd::Categorical random_categorical(Rng& rng, std::size_t size, double zero_chance = 0.0) {
  std::vector<double> w(size);
  for (double& x : w) x = std::exp(uniform(rng, -6.0, 0.0));
  if (zero_chance > 0.0) {
    const std::size_t keep = pick(rng, 0, size - 1);
    for (std::size_t i = 0; i < size; ++i) {
      if (i != keep && uniform(rng, 0.0, 1.0) < zero_chance) w[i] = 0.0;
    }
  }
  return ssd::normalize(w);
}

// Random nonempty subset, members in random order.
inline ssd::IndexSet random_subset(Rng& rng, std::size_t size) {
  std::vector<ssd::Token> all(size);
  for (std::size_t i = 0; i < size; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(pick(rng, 1, size));
  return ssd::IndexSet(all);
}

inline std::vector<double> random_vector(Rng& rng, std::size_t size, double lo, double hi) {
  std::vector<double> v(size);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

inline double max_abs_diff(const ssd::Categorical& a, const ssd::Categorical& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace testing

#include <functional>
#include <optional>

#include "ssd/error.hpp"

namespace testing {

// Error code raised by `f`, or nullopt if it returns normally.
inline std::optional<ssd::ErrorCode> error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ssd::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
