#pragma once

// Information-theoretic primitives and the surprise calculus built on them.
// All logarithms are natural; quantities are in nats.

#include <cstdint>
#include <span>
#include <vector>

#include "detour/distribution.hpp"

namespace detour::surprise {

double entropy(std::span<const double> p);
inline double entropy(const Distribution& p) { return entropy(p.probs()); }

// Values at or below this count as zero dispersion (flat surprisal profile).
inline constexpr double kDispersionFloor = 1e-24;

// Variance of the surprisal -ln P(X) under P. Clamped at zero.
double information_dispersion(std::span<const double> p);
inline double information_dispersion(const Distribution& p) {
  return information_dispersion(p.probs());
}

// H(Q, P) = -sum q_i ln p_i; +inf when q puts mass where p has none.
double cross_entropy(const Distribution& q, const Distribution& p);

double kl_divergence(const Distribution& q, const Distribution& p);

// (H(Q,P) - H(P)) / sqrt(V_I(P)).
//
// A zero-dispersion reference (uniform or degenerate) yields 0 when the
// numerator is 0 and +inf otherwise.
double surprise_divergence(const Distribution& q, const Distribution& p);

// |-ln p_i - H(P)| / sqrt(V_I(P)). Zero-dispersion references give 0 for any
// outcome with positive mass and +inf for an impossible one.
double surprise_coefficient(std::size_t outcome_index, std::span<const double> p);
inline double surprise_coefficient(std::size_t outcome_index, const Distribution& p) {
  return surprise_coefficient(outcome_index, p.probs());
}

double normal_cdf(double x);

// Two-sided normal tail 2 * (1 - Phi(c)) for c >= 0, computed without
// cancellation.
double two_sided_p_value(double c);

// CDF of the chi distribution with one degree of freedom: 2 Phi(x) - 1.
double chi1_cdf(double x);

// P(HV = 0 | C_U): 1/2 - chi1_cdf(|c|)/2 for c < 0, 1/2 + chi1_cdf(c)/2
// otherwise. Accepts +-inf.
double influence_probability(double c_u);

struct SurpriseVerdict {
  double coefficient = 0.0;
  double p_value = 1.0;
  bool rejected = false;
  double alpha = 0.05;
};

// Tests H0 "the realised outcome is not a surprise under p".
SurpriseVerdict surprise_test(std::size_t outcome_index, std::span<const double> p, double alpha);
inline SurpriseVerdict surprise_test(std::size_t outcome_index, const Distribution& p,
                                     double alpha) {
  return surprise_test(outcome_index, p.probs(), alpha);
}

// Sample-level version of the same test: sqrt(n) * D_S(P_hat || P) with the
// two-sided normal p-value. Requires V_I(p) > 0.
SurpriseVerdict sample_surprise_test(std::span<const double> counts, const Distribution& p,
                                     double alpha);

// Unbiased sample estimate of V_I(P) from draws of P (indices into p).
double empirical_information_dispersion(std::span<const std::size_t> draws, const Distribution& p);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t reps = 0;
};

// Two-sided one-sample Kolmogorov-Smirnov test of `values` against N(0, 1).
KsResult ks_test_standard_normal(std::vector<double> values);

// Draws `reps` samples of size n from p and compares sqrt(n) * D_S(P_hat||P)
// against N(0, 1). Throws DegenerateReference when V_I(p) = 0.
KsResult normality_mc_check(const Distribution& p, std::size_t n, std::size_t reps,
                            std::uint64_t seed);

// Fraction of `reps` size-n samples from p rejected by sample_surprise_test.
double h0_rejection_rate(const Distribution& p, std::size_t n, std::size_t reps, double alpha,
                         std::uint64_t seed);

}  // namespace detour::surprise
