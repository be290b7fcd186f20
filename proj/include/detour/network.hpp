#pragma once

// Two-slice dynamic decision network: observation chance nodes at t and t+1,
// the two decision nodes, an optional binary hidden node and one utility node.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detour/distribution.hpp"
#include "detour/domain.hpp"

namespace detour::network {

enum class NodeKind { chance, decision, utility, hidden };

std::string_view to_string(NodeKind kind);

struct VariableSpec {
  std::string name;
  NodeKind kind = NodeKind::chance;
  int cardinality = 2;  // 0 for utility nodes

  bool operator==(const VariableSpec&) const = default;
};

// P(child | parents) stored densely. Parent configurations are enumerated in
// row-major order of the declared parent list (last parent varies fastest);
// within a configuration the child's values are contiguous.
class ConditionalTable {
 public:
  ConditionalTable(std::string child, int cardinality, std::vector<std::string> parents,
                   std::vector<int> parent_cardinalities, std::vector<double> values);

  static ConditionalTable uniform(std::string child, int cardinality,
                                  std::vector<std::string> parents,
                                  std::vector<int> parent_cardinalities);

  const std::string& child() const { return child_; }
  int cardinality() const { return cardinality_; }
  const std::vector<std::string>& parents() const { return parents_; }
  const std::vector<int>& parent_cardinalities() const { return parent_cards_; }
  std::size_t config_count() const { return config_count_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t config_index(std::span<const int> parent_values) const;
  std::vector<int> config_values(std::size_t config) const;

  std::span<const double> column(std::size_t config) const {
    return {values_.data() + config * static_cast<std::size_t>(cardinality_),
            static_cast<std::size_t>(cardinality_)};
  }
  double probability(std::size_t config, int value) const {
    return values_[config * static_cast<std::size_t>(cardinality_) +
                   static_cast<std::size_t>(value)];
  }
  Distribution distribution(std::size_t config) const;

  void set_column(std::size_t config, std::span<const double> probs);

  // Position of `name` in the parent list, if present.
  std::optional<std::size_t> parent_position(std::string_view name) const;

  bool operator==(const ConditionalTable&) const = default;

 private:
  std::string child_;
  int cardinality_;
  std::vector<std::string> parents_;
  std::vector<int> parent_cards_;
  std::size_t config_count_ = 1;
  std::vector<double> values_;
};

// U = -2D - |HA-5| + 10 TVF - E_SF - E_SA when BT = 0, -10 - E_SF - E_SA
// when BT = 1, then mapped through scale * U + offset. The affine knobs exist
// for invariance experiments; the defaults give the plain utility.
struct UtilityModel {
  double scale = 1.0;
  double offset = 0.0;

  double operator()(const DiscreteObservation& obs, const DiscreteAction& act) const;
  bool operator==(const UtilityModel&) const = default;
};

double step_forward_energy(int sf);
double step_aside_energy(int sa);
double utility(const DiscreteObservation& obs, const DiscreteAction& act);

struct Edge {
  std::string from;
  int from_slice = 0;  // 0 = t, 1 = t+1
  std::string to;
  int to_slice = 1;

  bool operator==(const Edge&) const = default;
};

// Parent of a CPT resolved to where its value lives during inference.
struct ParentRef {
  enum class Source { observation, decision, hidden } source = Source::observation;
  int index = 0;
};

class TwoSliceNetwork {
 public:
  // observation_cpts must hold one table per observation variable (any order);
  // parents may name slice-t observation variables, SF, SA and, when
  // hidden_cpt is present, HV. HV's own parents must be observation variables.
  TwoSliceNetwork(std::vector<ConditionalTable> observation_cpts,
                  std::optional<ConditionalTable> hidden_cpt = std::nullopt,
                  UtilityModel utility = {});

  std::vector<VariableSpec> variables() const;
  bool has_hidden() const { return hidden_cpt_.has_value(); }

  // Table of the t+1 copy of an observation variable, or of HV.
  const ConditionalTable& cpt(std::string_view child) const;
  const ConditionalTable& observation_cpt(std::size_t var) const { return observation_cpts_[var]; }
  const ConditionalTable& hidden_cpt() const;
  const UtilityModel& utility_model() const { return utility_; }

  std::vector<Edge> inter_edges() const;
  std::vector<Edge> intra_edges() const;

  TwoSliceNetwork with_cpt(ConditionalTable table) const;
  TwoSliceNetwork with_utility(UtilityModel utility) const;

  // Configuration index of an observation CPT given slice-t evidence, the
  // action and (when the table has HV as parent) an HV value.
  std::size_t observation_config(std::size_t var, const DiscreteObservation& obs_t,
                                 const DiscreteAction& act, int hv = 0) const;
  std::size_t hidden_config(const DiscreteObservation& obs_t) const;

  bool operator==(const TwoSliceNetwork& other) const {
    return observation_cpts_ == other.observation_cpts_ && hidden_cpt_ == other.hidden_cpt_ &&
           utility_ == other.utility_;
  }

 private:
  void resolve();
  std::size_t config_for(const ConditionalTable& table, const std::vector<ParentRef>& refs,
                         const DiscreteObservation& obs_t, const DiscreteAction& act,
                         int hv) const;

  std::vector<ConditionalTable> observation_cpts_;  // canonical observation order
  std::optional<ConditionalTable> hidden_cpt_;
  UtilityModel utility_;
  std::vector<std::vector<ParentRef>> observation_refs_;
  std::vector<ParentRef> hidden_refs_;
};

// Largest |difference| between matching CPT entries of the two networks.
// Throws InvalidNetwork when the networks differ in structure.
double max_abs_cpt_difference(const TwoSliceNetwork& a, const TwoSliceNetwork& b);

nlohmann::json to_json(const TwoSliceNetwork& net);
TwoSliceNetwork network_from_json(const nlohmann::json& j);

}  // namespace detour::network
