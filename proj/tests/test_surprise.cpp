#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "detour/distribution.hpp"
#include "detour/errors.hpp"
#include "detour/rng.hpp"
#include "detour/surprise.hpp"

using namespace detour;
using namespace detour::surprise;

namespace {

// Oracles written straight from the definitions, sharing no code with the
// library.
double h_oracle(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h += x * std::log(1.0 / x);
  }
  return h;
}

double vi_oracle(const std::vector<double>& p) {
  const double h = h_oracle(p);
  double v = 0.0;
  for (double x : p) {
    if (x > 0.0) {
      const double d = -std::log(x) - h;
      v += x * d * d;
    }
  }
  return v;
}

double ds_oracle(const std::vector<double>& q, const std::vector<double>& p) {
  double cross = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) cross -= q[i] * std::log(p[i]);
  return (cross - h_oracle(p)) / std::sqrt(vi_oracle(p));
}

std::vector<double> random_simplex(CounterRng& rng, std::size_t k) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& x : p) {
    x = -std::log(1.0 - rng.uniform()) + 1e-3;
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(Distribution::from_probs({0.5, 0.6}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::from_probs({-0.1, 1.1}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::from_probs({}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution({"a"}, {0.5, 0.5}), InvalidDistribution);
  const auto d = Distribution::uniform(4);
  CHECK(d.size() == 4);
  CHECK(d.outcomes()[3] == "3");
  CHECK(d.index_of("2") == 2);
  CHECK_THROWS_AS(d.index_of("9"), IndexOutOfRange);
}

TEST_CASE("entropy examples") {
  CHECK(entropy(Distribution::uniform(4)) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(entropy(Distribution::from_probs({1.0, 0.0})) == 0.0);
  CHECK(entropy(Distribution::from_probs({0.75, 0.25})) == doctest::Approx(0.5623351446).epsilon(1e-9));
}

TEST_CASE("information dispersion examples") {
  CHECK(information_dispersion(Distribution::uniform(7)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(information_dispersion(Distribution::from_probs({1.0, 0.0})) == 0.0);
  CHECK(information_dispersion(Distribution::from_probs({0.75, 0.25})) ==
        doctest::Approx(vi_oracle({0.75, 0.25})).epsilon(1e-12));
  CHECK(information_dispersion(Distribution::from_probs({0.75, 0.25})) ==
        doctest::Approx(0.2263).epsilon(1e-3));
}

TEST_CASE("kl divergence examples") {
  const auto p = Distribution::from_probs({0.3, 0.7});
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(kl_divergence(Distribution::from_probs({1.0, 0.0}), Distribution::uniform(2)) ==
        doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(kl_divergence(Distribution::uniform(2), Distribution::from_probs({1.0, 0.0}))));
  CHECK_THROWS_AS(kl_divergence(Distribution::uniform(2), Distribution::uniform(3)), DomainMismatch);
  CHECK_THROWS_AS(kl_divergence(Distribution({"a", "b"}, {0.5, 0.5}), Distribution::uniform(2)),
                  DomainMismatch);
}

TEST_CASE("surprise divergence examples") {
  const auto p = Distribution::from_probs({0.75, 0.25});
  CHECK(surprise_divergence(p, p) == 0.0);
  // Uniform reference and equal cross-entropy: the zero-dispersion guard
  // returns 0.
  CHECK(surprise_divergence(Distribution::from_probs({1.0, 0.0}), Distribution::uniform(2)) == 0.0);
  CHECK(surprise_divergence(Distribution::from_probs({0.9, 0.1}), p) ==
        doctest::Approx(ds_oracle({0.9, 0.1}, {0.75, 0.25})).epsilon(1e-12));
  // Degenerate reference, different q.
  CHECK(std::isinf(surprise_divergence(Distribution::from_probs({0.5, 0.5}),
                                       Distribution::from_probs({1.0, 0.0}))));
}

TEST_CASE("surprise coefficient examples") {
  for (std::size_t i = 0; i < 5; ++i) CHECK(surprise_coefficient(i, Distribution::uniform(5)) == 0.0);
  CHECK(surprise_coefficient(1, Distribution::from_probs({0.9, 0.1})) == doctest::Approx(3.0));
  CHECK(surprise_coefficient(0, Distribution::from_probs({1.0, 0.0})) == 0.0);
  CHECK(std::isinf(surprise_coefficient(1, Distribution::from_probs({1.0, 0.0}))));
  CHECK_THROWS_AS(surprise_coefficient(2, Distribution::uniform(2)), IndexOutOfRange);
}

TEST_CASE("binary surprise coefficient matches closed form") {
  // For P = (1-b, b), outcome b has C = sqrt((1-b)/b) and outcome 1-b has
  // C = sqrt(b/(1-b)).
  for (double b : {0.01, 0.05, 0.2, 0.35, 0.45}) {
    const auto p = Distribution::from_probs({1.0 - b, b});
    CHECK(surprise_coefficient(1, p) == doctest::Approx(std::sqrt((1.0 - b) / b)).epsilon(1e-12));
    CHECK(surprise_coefficient(0, p) == doctest::Approx(std::sqrt(b / (1.0 - b))).epsilon(1e-12));
  }
}

TEST_CASE("surprise test examples") {
  auto v = surprise_test(0, Distribution::uniform(3), 0.05);
  CHECK(v.coefficient == 0.0);
  CHECK(v.p_value == 1.0);
  CHECK_FALSE(v.rejected);

  CHECK(two_sided_p_value(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));

  v = surprise_test(1, Distribution::from_probs({1.0, 0.0}), 0.05);
  CHECK(v.rejected);
  CHECK(v.p_value == 0.0);

  // Verdict invariants on a sweep.
  CounterRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_simplex(rng, 4);
    const auto r = surprise_test(static_cast<std::size_t>(i % 4), p, 0.1);
    CHECK(r.p_value == doctest::Approx(2.0 * (1.0 - 0.5 * std::erfc(-r.coefficient / std::sqrt(2.0)))).epsilon(1e-9));
    CHECK(r.rejected == (r.p_value < 0.1));
  }
}

TEST_CASE("chi1 cdf") {
  CHECK(chi1_cdf(0.0) == 0.0);
  CHECK(chi1_cdf(1.0) == doctest::Approx(0.6826894921).epsilon(1e-9));
  CHECK(chi1_cdf(40.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(chi1_cdf(-1.0), NegativeInput);
}

TEST_CASE("influence probability") {
  CHECK(influence_probability(0.0) == 0.5);
  CHECK(influence_probability(-kInfinity) == 0.0);
  CHECK(influence_probability(kInfinity) == 1.0);
  CHECK(influence_probability(1.0) == doctest::Approx(0.8413447461).epsilon(1e-9));
  double prev = 0.0;
  for (int i = -400; i <= 400; ++i) {
    const double x = i / 40.0;
    const double p = influence_probability(x);
    CHECK(p >= prev);
    prev = p;
    CHECK(influence_probability(-x) == doctest::Approx(1.0 - p).epsilon(1e-12));
  }
}

TEST_CASE("entropy and dispersion bounds, random distributions") {
  CounterRng rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = 2 + static_cast<std::size_t>(i % 9);
    const auto p = random_simplex(rng, k);
    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);
    CHECK(h == doctest::Approx(h_oracle(p)).epsilon(1e-12));
    CHECK(information_dispersion(p) >= 0.0);
    CHECK(information_dispersion(p) == doctest::Approx(vi_oracle(p)).epsilon(1e-9));
  }
}

TEST_CASE("reformulation identity") {
  CounterRng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + static_cast<std::size_t>(i % 6);
    const auto q = Distribution::from_probs(random_simplex(rng, k));
    const auto p = Distribution::from_probs(random_simplex(rng, k));
    const double lhs = surprise_divergence(q, p);
    const double rhs =
        (kl_divergence(q, p) + entropy(q) - entropy(p)) / std::sqrt(information_dispersion(p));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("divergence equivalence along a converging sequence") {
  const auto p = Distribution::from_probs({0.6, 0.3, 0.1});
  double prev_kl = kInfinity;
  for (int n = 2; n <= 4096; n *= 2) {
    std::vector<double> q(3);
    for (std::size_t i = 0; i < 3; ++i) q[i] = (1.0 - 1.0 / n) * p[i] + (1.0 / n) / 3.0;
    const auto qd = Distribution::from_probs(q);
    const double kl = kl_divergence(qd, p);
    const double ds = surprise_divergence(qd, p);
    CHECK(kl < prev_kl);
    prev_kl = kl;
    if (n == 4096) {
      CHECK(kl < 1e-6);
      CHECK(ds * ds < 1e-6);
    }
  }
}

TEST_CASE("empirical dispersion converges") {
  const auto p = Distribution::from_probs({0.5, 0.3, 0.15, 0.05});
  const double vi = information_dispersion(p);
  std::vector<double> errors;
  for (std::size_t n : {100u, 10000u, 1000000u}) {
    CounterRng rng(99);
    std::vector<std::size_t> draws(n);
    for (auto& d : draws) d = rng.categorical(p.probs());
    errors.push_back(std::abs(empirical_information_dispersion(draws, p) - vi));
  }
  CHECK(errors[2] < errors[0]);
  CHECK(errors[2] < 0.01);
}

TEST_CASE("normality check determinism and degenerate guard") {
  const auto p = Distribution::from_probs({0.7, 0.2, 0.1});
  const auto a = normality_mc_check(p, 1000, 100, 5);
  const auto b = normality_mc_check(p, 1000, 100, 5);
  CHECK(a.statistic == b.statistic);
  CHECK_THROWS_AS(normality_mc_check(Distribution::uniform(2), 1000, 100, 5), DegenerateReference);
}

TEST_CASE("kolmogorov-smirnov sanity") {
  // Exact N(0,1) quantiles at the plotting positions give a tiny statistic.
  std::vector<double> v;
  CounterRng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double u1 = rng.uniform() + 1e-300;
    const double u2 = rng.uniform();
    v.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
  }
  CHECK(ks_test_standard_normal(v).p_value > 0.01);
  for (auto& x : v) x += 0.5;
  CHECK(ks_test_standard_normal(v).p_value < 1e-6);
}
