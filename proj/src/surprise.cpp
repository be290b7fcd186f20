#include "detour/surprise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "detour/errors.hpp"
#include "detour/rng.hpp"

namespace detour::surprise {
namespace {

void require_same_domain(const Distribution& q, const Distribution& p) {
  if (!q.same_domain(p)) throw DomainMismatch("distributions are over different outcome lists");
}

std::vector<double> draw_counts(CounterRng& rng, std::span<const double> p, std::size_t n) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  std::vector<double> counts(p.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= p.size()) k = p.size() - 1;
    counts[k] += 1.0;
  }
  return counts;
}

}  // namespace

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double pi : p) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return h;
}

double information_dispersion(std::span<const double> p) {
  // Centred sum: exact zero terms for uniform support, no cancellation.
  const double h = entropy(p);
  double v = 0.0;
  for (double x : p) {
    if (x <= 0.0) continue;
    const double d = -std::log(x) - h;
    v += x * d * d;
  }
  // Rounding residue of a flat surprisal profile.
  return v > kDispersionFloor ? v : 0.0;
}

double cross_entropy(const Distribution& q, const Distribution& p) {
  require_same_domain(q, p);
  double h = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (p[i] <= 0.0) return kInfinity;
    h -= q[i] * std::log(p[i]);
  }
  return h;
}

double kl_divergence(const Distribution& q, const Distribution& p) {
  require_same_domain(q, p);
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (p[i] <= 0.0) return kInfinity;
    d += q[i] * std::log(q[i] / p[i]);
  }
  return d > 0.0 ? d : 0.0;
}

double surprise_divergence(const Distribution& q, const Distribution& p) {
  const double cross = cross_entropy(q, p);
  const double h = entropy(p);
  const double v = information_dispersion(p);
  if (cross == kInfinity) return kInfinity;
  const double numerator = cross - h;
  if (v <= 0.0) {
    return std::abs(numerator) <= 1e-12 ? 0.0 : kInfinity;
  }
  return numerator / std::sqrt(v);
}

double surprise_coefficient(std::size_t outcome_index, std::span<const double> p) {
  if (outcome_index >= p.size()) {
    throw IndexOutOfRange("outcome " + std::to_string(outcome_index) + " of " +
                          std::to_string(p.size()));
  }
  const double pi = p[outcome_index];
  if (pi <= 0.0) return kInfinity;
  const double v = information_dispersion(p);
  if (v <= 0.0) return 0.0;
  return std::abs(-std::log(pi) - entropy(p)) / std::sqrt(v);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double two_sided_p_value(double c) {
  if (c == kInfinity) return 0.0;
  return std::erfc(std::abs(c) / std::numbers::sqrt2);
}

double chi1_cdf(double x) {
  if (std::isnan(x) || x < 0.0) throw NegativeInput("chi1_cdf requires x >= 0");
  if (x == kInfinity) return 1.0;
  return std::erf(x / std::numbers::sqrt2);
}

double influence_probability(double c_u) {
  if (c_u < 0.0) return 0.5 - 0.5 * chi1_cdf(-c_u);
  return 0.5 + 0.5 * chi1_cdf(c_u);
}

SurpriseVerdict surprise_test(std::size_t outcome_index, std::span<const double> p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainViolation("alpha must lie in (0, 1)");
  SurpriseVerdict v;
  v.alpha = alpha;
  v.coefficient = surprise_coefficient(outcome_index, p);
  v.p_value = two_sided_p_value(v.coefficient);
  v.rejected = v.p_value < alpha;
  return v;
}

SurpriseVerdict sample_surprise_test(std::span<const double> counts, const Distribution& p,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainViolation("alpha must lie in (0, 1)");
  if (counts.size() != p.size()) throw DomainMismatch("count vector does not match reference");
  if (information_dispersion(p) <= 0.0) {
    throw DegenerateReference("reference has zero information dispersion");
  }
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const Distribution p_hat(p.outcomes(), Distribution::from_counts(counts).probs());
  SurpriseVerdict v;
  v.alpha = alpha;
  v.coefficient = std::sqrt(n) * surprise_divergence(p_hat, p);
  v.p_value = two_sided_p_value(v.coefficient);
  v.rejected = v.p_value < alpha;
  return v;
}

double empirical_information_dispersion(std::span<const std::size_t> draws,
                                        const Distribution& p) {
  if (draws.size() < 2) throw InsufficientData("need at least two draws");
  const double n = static_cast<double>(draws.size());
  double mean = 0.0;
  for (std::size_t k : draws) {
    if (k >= p.size()) throw IndexOutOfRange("draw outside the reference support");
    mean += -std::log(p[k]);
  }
  mean /= n;  // H(P_hat, P)
  double ss = 0.0;
  for (std::size_t k : draws) {
    const double d = -std::log(p[k]) - mean;
    ss += d * d;
  }
  return ss / (n - 1.0);
}

KsResult ks_test_standard_normal(std::vector<double> values) {
  if (values.empty()) throw InsufficientData("KS test on an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  // Asymptotic Kolmogorov tail with the Stephens small-sample correction.
  const double sqrt_n = std::sqrt(n);
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  double q = 0.0;
  if (lambda < 1e-3) {
    q = 1.0;
  } else {
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
      q += term;
      if (std::abs(term) < 1e-12) break;
      sign = -sign;
    }
    q = std::clamp(2.0 * q, 0.0, 1.0);
  }
  return KsResult{d, q, values.size()};
}

KsResult normality_mc_check(const Distribution& p, std::size_t n, std::size_t reps,
                            std::uint64_t seed) {
  if (information_dispersion(p) <= 0.0) {
    throw DegenerateReference("normality check needs V_I(p) > 0");
  }
  if (n == 0 || reps == 0) throw InsufficientData("n and reps must be positive");
  const CounterRng root(seed);
  std::vector<double> stats(reps);
  const double scale = std::sqrt(static_cast<double>(n));
  for (std::size_t r = 0; r < reps; ++r) {
    CounterRng rng = root.substream(r);
    const auto counts = draw_counts(rng, p.probs(), n);
    const Distribution p_hat(p.outcomes(), Distribution::from_counts(counts).probs());
    stats[r] = scale * surprise_divergence(p_hat, p);
  }
  return ks_test_standard_normal(std::move(stats));
}

double h0_rejection_rate(const Distribution& p, std::size_t n, std::size_t reps, double alpha,
                         std::uint64_t seed) {
  if (n == 0 || reps == 0) throw InsufficientData("n and reps must be positive");
  const CounterRng root(seed);
  std::size_t rejected = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    CounterRng rng = root.substream(r);
    const auto counts = draw_counts(rng, p.probs(), n);
    if (sample_surprise_test(counts, p, alpha).rejected) ++rejected;
  }
  return static_cast<double>(rejected) / static_cast<double>(reps);
}

}  // namespace detour::surprise
