#include <doctest.h>

#include <cmath>

#include "ssd/categorical.hpp"
#include "support.hpp"

using namespace ssd;
using testing::error_of;

TEST_CASE("construction validates mass and entries") {
  CHECK(error_of([] { Categorical({0.5, 0.6}); }) == ErrorCode::InvalidDistribution);
  CHECK(error_of([] { Categorical({1.5, -0.5}); }) == ErrorCode::InvalidEntry);
  CHECK(error_of([] { Categorical(std::vector<double>{}); }) == ErrorCode::InvalidDistribution);
  CHECK(error_of([] { Categorical({0.5, NAN, 0.5}); }) == ErrorCode::InvalidEntry);

  // Inside the 1e-9 window the vector is renormalized once.
  const Categorical p({0.5 + 4e-10, 0.5});
  CHECK(std::abs(p[0] + p[1] - 1.0) <= kSumTolerance);
}

TEST_CASE("normalize") {
  const Categorical half = normalize(std::vector<double>{2.0, 2.0});
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);

  const Categorical lock = normalize(std::vector<double>{0.7264, 0.0399});
  CHECK(lock[0] == doctest::Approx(0.7264 / 0.7663).epsilon(1e-15));
  CHECK(lock[0] == doctest::Approx(0.9479).epsilon(1e-4));
  CHECK(lock[1] == doctest::Approx(0.0521).epsilon(1e-3));

  CHECK(error_of([] { normalize(std::vector<double>{0.0, 0.0}); }) == ErrorCode::AllZero);
  CHECK(error_of([] { normalize(std::vector<double>{1.0, -1.0}); }) == ErrorCode::InvalidEntry);
}

TEST_CASE("normalize is scale invariant") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> w = testing::random_vector(rng, testing::pick(rng, 1, 20), 0.0, 3.0);
    const double c = std::exp(testing::uniform(rng, -20.0, 20.0));
    std::vector<double> scaled = w;
    for (double& x : scaled) x *= c;
    CHECK(testing::max_abs_diff(normalize(w), normalize(scaled)) <= 1e-12);
  }
}

TEST_CASE("softmax") {
  const Categorical p = softmax(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == 0.5);
  const Categorical big = softmax(std::vector<double>{1000.0, 1000.0 + std::log(3.0)});
  CHECK(big[1] == doctest::Approx(0.75).epsilon(1e-14));
  const Categorical masked = softmax(std::vector<double>{-INFINITY, 0.0});
  CHECK(masked[0] == 0.0);
  CHECK(error_of([] { softmax(std::vector<double>{-INFINITY, -double(INFINITY)}); }) == ErrorCode::AllZero);
}

TEST_CASE("restrict") {
  const Categorical u = Categorical::uniform(4);
  const Categorical r = restrict(u, {0, 1});
  CHECK(r.vector() == std::vector<double>{0.5, 0.5, 0.0, 0.0});

  const Categorical p{0.6, 0.3, 0.1};
  const Categorical q = restrict(p, {1, 2});
  CHECK(q[0] == 0.0);
  CHECK(q[1] == doctest::Approx(0.3 / 0.4).epsilon(1e-15));
  CHECK(q[2] == doctest::Approx(0.25).epsilon(1e-15));

  CHECK(error_of([] { restrict(Categorical{1.0, 0.0, 0.0}, {1}); }) == ErrorCode::ZeroMassSupport);
  CHECK(error_of([&] { restrict(p, IndexSet{}); }) == ErrorCode::EmptySet);
  CHECK(error_of([&] { restrict(p, {3}); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([] { IndexSet({1, 1}); }) == ErrorCode::DuplicateIndex);
}

TEST_CASE("restrict is idempotent") {
  testing::Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = testing::pick(rng, 1, 24);
    const Categorical p = testing::random_categorical(rng, n);
    const IndexSet k = testing::random_subset(rng, n);
    const Categorical once = restrict(p, k);
    CHECK(restrict(once, k) == once);
  }
}

TEST_CASE("entropy") {
  CHECK(entropy(Categorical::uniform(4)) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(entropy(Categorical{1.0, 0.0, 0.0}) == 0.0);
  const double oracle = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK(entropy(Categorical{0.75, 0.25}) == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(oracle == doctest::Approx(0.562335).epsilon(1e-6));
}

TEST_CASE("renyi entropy") {
  for (std::size_t k : {2u, 5u, 16u}) {
    for (double alpha : {0.3, 0.5, 2.0, 7.0, double(INFINITY)}) {
      CHECK(renyi_entropy(Categorical::uniform(k), alpha) == doctest::Approx(std::log(double(k))).epsilon(1e-13));
    }
  }
  const double oracle = 2.0 * std::log(std::sqrt(0.75) + std::sqrt(0.25));
  CHECK(renyi_entropy(Categorical{0.75, 0.25}, 0.5) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(0.623810).epsilon(1e-6));
  CHECK(renyi_entropy(Categorical{1.0, 0.0}, 2.0) == 0.0);
  CHECK(renyi_entropy(Categorical{0.75, 0.25}, 1.0) == entropy(Categorical{0.75, 0.25}));
  CHECK(error_of([] { renyi_entropy(Categorical{0.5, 0.5}, 0.0); }) == ErrorCode::InvalidOrder);
}

TEST_CASE("kl and cross entropy") {
  const Categorical half{0.5, 0.5};
  const Categorical q{0.75, 0.25};
  const double kl = 0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(0.5 / 0.25);
  CHECK(kl_divergence(half, q) == doctest::Approx(kl).epsilon(1e-15));
  CHECK(kl == doctest::Approx(0.143841).epsilon(1e-6));
  CHECK(kl_divergence(q, q) == 0.0);
  CHECK(error_of([] { kl_divergence(Categorical{1.0, 0.0}, Categorical{0.0, 1.0}); }) == ErrorCode::SupportViolation);

  CHECK(cross_entropy(Categorical::uniform(4), Categorical::uniform(4)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(cross_entropy(Categorical{1.0, 0.0}, q) == doctest::Approx(-std::log(0.75)).epsilon(1e-15));
  CHECK(cross_entropy(half, q) == doctest::Approx(std::log(2.0) + kl).epsilon(1e-15));
  CHECK(cross_entropy(half, q) == doctest::Approx(0.836988).epsilon(1e-6));
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double oracle = -0.9 * std::log(0.9) - 0.1 * std::log(0.1);
  CHECK(binary_entropy(0.9) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(0.325083).epsilon(1e-6));
  CHECK(error_of([] { binary_entropy(1.5); }) == ErrorCode::OutOfRange);
}

TEST_CASE("random identities") {
  testing::Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = testing::pick(rng, 1, 32);
    const Categorical q = testing::random_categorical(rng, n);
    const Categorical p = testing::random_categorical(rng, n, 0.3);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    CHECK(std::abs(cross_entropy(p, q) - (entropy(p) + kl)) <= 1e-12);

    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(double(n)) + 1e-12);

    double prev = INFINITY;
    for (double alpha : {0.1, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 4.0, 10.0, double(INFINITY)}) {
      const double r = renyi_entropy(p, alpha);
      CHECK(r <= prev + 1e-12);
      prev = r;
    }
  }
}

TEST_CASE("ranking ties go to the lowest index") {
  const Categorical p{0.2, 0.4, 0.4};
  CHECK(p.argmax() == 1);
  CHECK(descending_ranking(p) == std::vector<Token>{1, 2, 0});
  CHECK(positive_support(Categorical{0.0, 1.0, 0.0}).members() == std::vector<Token>{1});
}
