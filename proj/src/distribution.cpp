#include "detour/distribution.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "detour/errors.hpp"

namespace detour {

void validate_probabilities(std::span<const double> probs) {
  if (probs.empty()) throw InvalidDistribution("empty probability vector");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidDistribution("probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(total));
  }
}

Distribution::Distribution(std::vector<std::string> outcomes, std::vector<double> probs)
    : outcomes_(std::move(outcomes)), probs_(std::move(probs)) {
  if (outcomes_.size() != probs_.size()) {
    throw InvalidDistribution("outcome and probability lists differ in length");
  }
  validate_probabilities(probs_);
}

Distribution Distribution::from_probs(std::vector<double> probs) {
  std::vector<std::string> labels(probs.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::to_string(i);
  return Distribution(std::move(labels), std::move(probs));
}

Distribution Distribution::uniform(std::size_t k) {
  if (k == 0) throw InvalidDistribution("uniform over zero outcomes");
  return from_probs(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Distribution Distribution::from_counts(std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw InvalidDistribution("counts sum to zero");
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) probs[i] = counts[i] / total;
  return from_probs(std::move(probs));
}

std::size_t Distribution::index_of(const std::string& outcome) const {
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    if (outcomes_[i] == outcome) return i;
  }
  throw IndexOutOfRange("no outcome labelled '" + outcome + "'");
}

void to_json(nlohmann::json& j, const Distribution& d) {
  j = nlohmann::json{{"outcomes", d.outcomes()}, {"probs", d.probs()}};
}

void from_json(const nlohmann::json& j, Distribution& d) {
  d = Distribution(j.at("outcomes").get<std::vector<std::string>>(),
                   j.at("probs").get<std::vector<double>>());
}

}  // namespace detour
