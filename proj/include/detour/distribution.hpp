#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace detour {

// Sentinel for "maximally surprising" / unbounded divergences. IEEE +inf
// orders above every finite value and never turns into NaN under the
// operations the library applies to it.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline constexpr double kProbabilityTolerance = 1e-9;

// Finite probability vector over a labelled, ordered outcome set.
class Distribution {
 public:
  Distribution(std::vector<std::string> outcomes, std::vector<double> probs);

  // Labels default to "0", "1", ...
  static Distribution from_probs(std::vector<double> probs);
  static Distribution uniform(std::size_t k);
  // Maximum-likelihood estimate from category counts.
  static Distribution from_counts(std::span<const double> counts);

  std::size_t size() const { return probs_.size(); }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  std::size_t index_of(const std::string& outcome) const;
  bool same_domain(const Distribution& other) const { return outcomes_ == other.outcomes_; }

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<std::string> outcomes_;
  std::vector<double> probs_;
};

// Throws InvalidDistribution when probs is not a probability vector.
void validate_probabilities(std::span<const double> probs);

void to_json(nlohmann::json& j, const Distribution& d);
void from_json(const nlohmann::json& j, Distribution& d);

}  // namespace detour
