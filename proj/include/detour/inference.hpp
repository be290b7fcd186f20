#pragma once

// Exact next-slice prediction by enumeration over the 220 joint observation
// states, expected utility and MEU action choice.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "detour/distribution.hpp"
#include "detour/domain.hpp"
#include "detour/network.hpp"

namespace detour::inference {

using JointProbabilities = std::array<double, vars::kJointObservationCount>;

// Per-variable predictive columns for one HV value.
struct VariableColumns {
  std::array<std::vector<double>, 4> columns;
};

// P(obs_{t+1} | obs_t, act) indexed by joint_index. HV is marginalised with
// its CPT given obs_t unless hv_belief is given. Passing a belief to a
// network without HV throws ArityMismatch.
JointProbabilities joint_probabilities(const network::TwoSliceNetwork& net,
                                       const DiscreteObservation& obs_t,
                                       const DiscreteAction& act,
                                       const std::optional<Distribution>& hv_belief = std::nullopt);

// Same as joint_probabilities, labelled "D,HA,BT,TVF" per outcome.
Distribution predict_joint(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                           const DiscreteAction& act,
                           const std::optional<Distribution>& hv_belief = std::nullopt);

// Marginal P(X_{t+1} | obs_t, act) for each observation variable.
std::array<std::vector<double>, 4> predict_marginals(const network::TwoSliceNetwork& net,
                                                     const DiscreteObservation& obs_t,
                                                     const DiscreteAction& act);

// Weight of HV = 0 and HV = 1 used when marginalising (1, 0 without HV).
std::array<double, 2> hidden_weights(const network::TwoSliceNetwork& net,
                                     const DiscreteObservation& obs_t,
                                     const std::optional<Distribution>& hv_belief = std::nullopt);

double expected_utility(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                        const DiscreteAction& act);

// Push-forward of the predicted joint through the utility function. Atoms
// are sorted by value; values within 1e-9 share an atom; zero-mass values
// are dropped.
struct UtilityDistribution {
  std::vector<double> values;
  std::vector<double> probs;

  double mean() const;
  // Atom holding `u` (within 1e-9), if any.
  std::optional<std::size_t> find(double u) const;
  Distribution as_distribution() const;
};

inline constexpr double kUtilityMergeTolerance = 1e-9;

UtilityDistribution utility_distribution(const network::TwoSliceNetwork& net,
                                         const DiscreteObservation& obs_t,
                                         const DiscreteAction& act);

struct MeuDecision {
  DiscreteAction action;
  double meu = 0.0;
};

// Exhaustive argmax over the 55 actions; ties go to the lowest
// action_index, i.e. lexicographically smallest (SF, SA).
MeuDecision select_action_meu(const network::TwoSliceNetwork& net,
                              const DiscreteObservation& obs_t);

}  // namespace detour::inference
