#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "detour/discovery.hpp"
#include "detour/errors.hpp"
#include "detour/rng.hpp"
#include "detour/surprise.hpp"

using namespace detour;
using namespace detour::discovery;

namespace {

std::vector<int> iid(CounterRng& rng, std::size_t n, int card) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(card));
  return v;
}

bool has_parent(const Selection& s, const std::string& name) {
  return std::any_of(s.parents.begin(), s.parents.end(),
                     [&](const EdgeCandidate& e) { return e.source == name; });
}

const SampleLog& env_log() {
  static const SampleLog log = sample_random_policy(env::WorldConfig{}, 10000, 20, 1);
  return log;
}

}  // namespace

TEST_CASE("sample log bookkeeping") {
  SampleLog log;
  log.add_column("A", 2, {0, 1, 0, 1, 1});
  CHECK_THROWS_AS(log.add_column("B", 2, {0, 1}), DomainMismatch);
  CHECK_THROWS_AS(log.add_column("A", 2, {0, 1, 0, 1, 1}), DomainMismatch);
  CHECK_THROWS_AS(log.add_column("C", 2, {0, 1, 2, 1, 1}), IndexOutOfRange);
  CHECK_THROWS_AS(log.column("Z"), UnknownVariable);
  log.start_segment(3);
  CHECK(log.window_ends(1) == std::vector<std::size_t>{1, 2, 4});
  CHECK(log.window_ends(2) == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(log.start_segment(5), IndexOutOfRange);
}

TEST_CASE("causal coefficient") {
  const auto u4 = Distribution::uniform(4);
  const auto point = Distribution::from_probs({1.0, 0.0, 0.0});
  CHECK(causal_coefficient(u4, point) == doctest::Approx(1.0));
  CHECK(causal_coefficient(u4, u4) == 0.0);
  CounterRng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto a = empirical_distribution(iid(rng, 50, 3), 3);
    const auto b = empirical_distribution(iid(rng, 20, 5), 5);
    CHECK(causal_coefficient(a, b) == -causal_coefficient(b, a));
  }
  CHECK_THROWS_AS(causal_coefficient(Distribution::uniform(1), u4), CardinalityOne);
  CHECK_THROWS_AS(empirical_distribution(std::vector<int>{}, 3), InsufficientData);
}

TEST_CASE("causal action coefficient") {
  CounterRng rng(3);
  const auto d = iid(rng, 20000, 5);
  const auto o = iid(rng, 20000, 4);
  CHECK(std::abs(causal_action_coefficient(o, 4, d, 5)) < kEstimationTolerance);

  std::vector<int> f(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = d[i] % 3;
  const double h = surprise::entropy(empirical_distribution(f, 3));
  CHECK(causal_action_coefficient(f, 3, d, 5) == doctest::Approx(h).epsilon(1e-12));

  const std::vector<int> constant(d.size(), 2);
  CHECK(causal_action_coefficient(constant, 4, d, 5) == 0.0);
}

TEST_CASE("conditional entropy against hand counts") {
  const std::vector<int> y = {0, 0, 1, 1, 0, 1};
  const std::vector<int> x = {0, 0, 0, 1, 1, 1};
  // x = 0: (0,0,1) -> H = -(2/3 ln 2/3 + 1/3 ln 1/3); x = 1: (1,0,1) same.
  const double hb = -(2.0 / 3.0 * std::log(2.0 / 3.0) + 1.0 / 3.0 * std::log(1.0 / 3.0));
  CHECK(conditional_entropy(y, 2, {x}, {2}) == doctest::Approx(hb).epsilon(1e-12));
  CHECK(conditional_entropy(y, 2, {}, {}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(conditional_entropy(y, 2, {x}, {}), ArityMismatch);
}

TEST_CASE("transfer entropy") {
  CounterRng rng(4);
  const std::size_t n = 10000;
  const auto x = iid(rng, n, 4);
  std::vector<int> y(n, 0);
  for (std::size_t t = 1; t < n; ++t) y[t] = x[t - 1];
  CHECK(transfer_entropy(x, 4, y, 4) == doctest::Approx(std::log(4.0)).epsilon(0.05 / std::log(4.0)));

  const auto z = iid(rng, n, 4);
  const double indep = transfer_entropy(x, 4, z, 4);
  CHECK(indep > -kEstimationTolerance);
  CHECK(indep < 0.02);

  const std::vector<int> flat(n, 1);
  CHECK(transfer_entropy(flat, 3, z, 4) == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<int> one = {1};
  CHECK_THROWS_AS(transfer_entropy(one, 2, one, 2), InsufficientData);
  const auto sx = iid(rng, 20, 4);
  const auto sy = iid(rng, 20, 4);
  CHECK_THROWS_AS(transfer_entropy(sx, 4, sy, 4), InsufficientData);
  CHECK_THROWS_AS(transfer_entropy(sx, 4, std::vector<int>(19, 0), 4), DomainMismatch);
}

TEST_CASE("normalized transfer entropy") {
  CounterRng rng(5);
  const std::size_t n = 10000;
  const auto a = iid(rng, n, 3);
  const auto noise = iid(rng, n, 3);
  std::vector<int> driven(n, 0);
  for (std::size_t t = 1; t < n; ++t) driven[t] = a[t - 1];
  SampleLog log;
  log.add_column("A", 3, a);
  log.add_column("O", 3, driven);
  log.add_column("N", 3, noise);
  log.add_column("K", 2, std::vector<int>(n, 0));
  CHECK(normalized_transfer_entropy(log, {"A"}, "O") == doctest::Approx(1.0));
  const double irrelevant = normalized_transfer_entropy(log, {"A"}, "N");
  CHECK(irrelevant >= 0.0);
  CHECK(irrelevant < 0.01);
  CHECK_THROWS_AS(normalized_transfer_entropy(log, {"A"}, "K"), ZeroBaseEntropy);
}

TEST_CASE("forward selection on synthetic data") {
  CounterRng rng(6);
  const std::size_t n = 8000;
  const auto a = iid(rng, n, 3);
  const auto b = iid(rng, n, 3);
  std::vector<int> t(n, 0);
  for (std::size_t i = 1; i < n; ++i) t[i] = a[i - 1];
  SampleLog log;
  log.add_column("A", 3, a);
  log.add_column("B", 3, b);
  log.add_column("T", 3, t);

  const auto s = forward_select(log, "T", {"A", "B", "T"});
  REQUIRE(s.parents.size() == 1);
  CHECK(s.parents[0].source == "A");
  CHECK(s.parents[0].target == "T");
  CHECK(s.parents[0].kind == EdgeKind::inter);
  CHECK(s.residual_entropy == doctest::Approx(0.0).epsilon(1e-12));

  const auto r = forward_select(log, "T", {"T", "B", "A"});
  CHECK(r.parents == s.parents);

  const auto none = forward_select(log, "B", {"A", "T"});
  CHECK(none.parents.empty());
}

TEST_CASE("environment log: self edges and action influence") {
  const auto& log = env_log();
  CHECK(log.length() == 10000);
  CHECK(log.segment_starts().size() == 499);

  const std::vector<std::string> cands = {"D", "HA", "BT", "TVF"};
  const auto bt = forward_select(log, "BT", cands);
  CHECK(has_parent(bt, "BT"));
  std::vector<std::string> reversed(cands.rbegin(), cands.rend());
  CHECK(forward_select(log, "BT", reversed).parents == bt.parents);

  const auto report = discover(log);
  for (const auto& v : cands) {
    CHECK(std::any_of(report.inter.begin(), report.inter.end(), [&](const EdgeCandidate& e) {
      return e.source == v && e.target == v;
    }));
  }

  const double depth = normalized_transfer_entropy(log, {"SF"}, "D");
  const double heading = normalized_transfer_entropy(log, {"SF"}, "HA");
  CHECK(depth > 0.0);
  CHECK(depth > heading);
  for (const auto& obs : cands) {
    for (const auto& act : action_columns()) {
      const double v = normalized_transfer_entropy(log, {act}, obs);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("random-policy sampler is deterministic") {
  const auto a = sample_random_policy(env::WorldConfig{}, 500, 50, 8);
  const auto b = sample_random_policy(env::WorldConfig{}, 500, 50, 8);
  REQUIRE(a.columns().size() == b.columns().size());
  for (std::size_t i = 0; i < a.columns().size(); ++i) CHECK(a.columns()[i].values == b.columns()[i].values);
  CHECK_THROWS_AS(sample_random_policy(env::WorldConfig{}, 10, 0, 1), ConfigInvalid);
}
