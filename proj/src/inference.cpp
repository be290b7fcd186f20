#include "detour/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "detour/errors.hpp"

namespace detour::inference {
namespace {

std::array<std::vector<double>, 4> columns_for(const network::TwoSliceNetwork& net,
                                               const DiscreteObservation& obs_t,
                                               const DiscreteAction& act, int hv) {
  std::array<std::vector<double>, 4> out;
  for (std::size_t v = 0; v < out.size(); ++v) {
    const auto& table = net.observation_cpt(v);
    const auto col = table.column(net.observation_config(v, obs_t, act, hv));
    out[v].assign(col.begin(), col.end());
  }
  return out;
}

void accumulate(JointProbabilities& joint, const std::array<std::vector<double>, 4>& cols,
                double weight) {
  std::size_t idx = 0;
  for (int d = 0; d < vars::kDepthBins; ++d) {
    const double pd = weight * cols[0][static_cast<std::size_t>(d)];
    for (int h = 0; h < vars::kHeadingBins; ++h) {
      const double ph = pd * cols[1][static_cast<std::size_t>(h)];
      for (int b = 0; b < 2; ++b) {
        const double pb = ph * cols[2][static_cast<std::size_t>(b)];
        for (int v = 0; v < 2; ++v) {
          joint[idx++] += pb * cols[3][static_cast<std::size_t>(v)];
        }
      }
    }
  }
}

}  // namespace

std::array<double, 2> hidden_weights(const network::TwoSliceNetwork& net,
                                     const DiscreteObservation& obs_t,
                                     const std::optional<Distribution>& hv_belief) {
  if (!net.has_hidden()) {
    if (hv_belief) throw ArityMismatch("HV belief given for a network without HV");
    return {1.0, 0.0};
  }
  if (hv_belief) {
    if (hv_belief->size() != 2) throw ArityMismatch("HV belief must be binary");
    return {(*hv_belief)[0], (*hv_belief)[1]};
  }
  const auto col = net.hidden_cpt().column(net.hidden_config(obs_t));
  return {col[0], col[1]};
}

JointProbabilities joint_probabilities(const network::TwoSliceNetwork& net,
                                       const DiscreteObservation& obs_t,
                                       const DiscreteAction& act,
                                       const std::optional<Distribution>& hv_belief) {
  if (!is_valid(obs_t)) throw ArityMismatch("observation out of range");
  if (!is_valid(act)) throw ArityMismatch("action out of range");
  JointProbabilities joint{};
  const auto w = hidden_weights(net, obs_t, hv_belief);
  for (int hv = 0; hv < 2; ++hv) {
    if (w[static_cast<std::size_t>(hv)] == 0.0) continue;
    accumulate(joint, columns_for(net, obs_t, act, hv), w[static_cast<std::size_t>(hv)]);
  }
  return joint;
}

Distribution predict_joint(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                           const DiscreteAction& act,
                           const std::optional<Distribution>& hv_belief) {
  const auto joint = joint_probabilities(net, obs_t, act, hv_belief);
  std::vector<std::string> labels;
  labels.reserve(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto o = observation_at(i);
    labels.push_back(std::to_string(o.depth) + "," + std::to_string(o.heading_angle) + "," +
                     std::to_string(o.barrier_tactile) + "," +
                     std::to_string(o.target_in_visual_field));
  }
  return Distribution(std::move(labels), std::vector<double>(joint.begin(), joint.end()));
}

std::array<std::vector<double>, 4> predict_marginals(const network::TwoSliceNetwork& net,
                                                     const DiscreteObservation& obs_t,
                                                     const DiscreteAction& act) {
  const auto w = hidden_weights(net, obs_t);
  std::array<std::vector<double>, 4> out;
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v].assign(static_cast<std::size_t>(vars::kObservationCards[v]), 0.0);
  }
  for (int hv = 0; hv < 2; ++hv) {
    const double weight = w[static_cast<std::size_t>(hv)];
    if (weight == 0.0) continue;
    const auto cols = columns_for(net, obs_t, act, hv);
    for (std::size_t v = 0; v < out.size(); ++v) {
      for (std::size_t k = 0; k < out[v].size(); ++k) out[v][k] += weight * cols[v][k];
    }
  }
  return out;
}

double expected_utility(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                        const DiscreteAction& act) {
  const auto joint = joint_probabilities(net, obs_t, act);
  const auto& u = net.utility_model();
  double total = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] != 0.0) total += joint[i] * u(observation_at(i), act);
  }
  return total;
}

double UtilityDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

std::optional<std::size_t> UtilityDistribution::find(double u) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(values[i] - u) <= kUtilityMergeTolerance) return i;
  }
  return std::nullopt;
}

Distribution UtilityDistribution::as_distribution() const {
  std::vector<std::string> labels;
  for (double v : values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    labels.emplace_back(buf);
  }
  return Distribution(std::move(labels), probs);
}

UtilityDistribution utility_distribution(const network::TwoSliceNetwork& net,
                                         const DiscreteObservation& obs_t,
                                         const DiscreteAction& act) {
  const auto joint = joint_probabilities(net, obs_t, act);
  const auto& u = net.utility_model();
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] > 0.0) atoms.emplace_back(u(observation_at(i), act), joint[i]);
  }
  std::sort(atoms.begin(), atoms.end());
  UtilityDistribution out;
  for (const auto& [value, prob] : atoms) {
    if (!out.values.empty() && value - out.values.back() <= kUtilityMergeTolerance) {
      out.probs.back() += prob;
    } else {
      out.values.push_back(value);
      out.probs.push_back(prob);
    }
  }
  return out;
}

MeuDecision select_action_meu(const network::TwoSliceNetwork& net,
                              const DiscreteObservation& obs_t) {
  MeuDecision best{action_at(0), expected_utility(net, obs_t, action_at(0))};
  for (std::size_t a = 1; a < vars::kActionCount; ++a) {
    const auto act = action_at(a);
    const double eu = expected_utility(net, obs_t, act);
    if (eu > best.meu) best = {act, eu};
  }
  return best;
}

}  // namespace detour::inference
