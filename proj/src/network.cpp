#include "detour/network.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "detour/errors.hpp"

namespace detour::network {
namespace {

constexpr std::string_view kSchema = "detour.network/1";

int observation_var_index(std::string_view name) {
  for (std::size_t i = 0; i < vars::kObservationNames.size(); ++i) {
    if (vars::kObservationNames[i] == name) return static_cast<int>(i);
  }
  return -1;
}

ParentRef resolve_parent(const std::string& name, int cardinality, bool hidden_allowed) {
  if (const int obs = observation_var_index(name); obs >= 0) {
    if (cardinality != vars::kObservationCards[static_cast<std::size_t>(obs)]) {
      throw ArityMismatch("parent " + name + " declared with cardinality " +
                          std::to_string(cardinality));
    }
    return {ParentRef::Source::observation, obs};
  }
  if (name == vars::kStepForward || name == vars::kStepAside) {
    const int expected =
        name == vars::kStepForward ? vars::kStepForwardCategories : vars::kStepAsideCategories;
    if (cardinality != expected) throw ArityMismatch("decision " + name + " cardinality");
    return {ParentRef::Source::decision, name == vars::kStepForward ? 0 : 1};
  }
  if (name == vars::kHidden) {
    if (!hidden_allowed) throw InvalidNetwork("HV used as a parent but the network has no HV");
    if (cardinality != vars::kHiddenCardinality) throw ArityMismatch("HV must be binary");
    return {ParentRef::Source::hidden, 0};
  }
  throw UnknownVariable("unknown parent '" + name + "'");
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::chance: return "chance";
    case NodeKind::decision: return "decision";
    case NodeKind::utility: return "utility";
    case NodeKind::hidden: return "hidden";
  }
  return "chance";
}

ConditionalTable::ConditionalTable(std::string child, int cardinality,
                                   std::vector<std::string> parents,
                                   std::vector<int> parent_cardinalities,
                                   std::vector<double> values)
    : child_(std::move(child)),
      cardinality_(cardinality),
      parents_(std::move(parents)),
      parent_cards_(std::move(parent_cardinalities)),
      values_(std::move(values)) {
  if (cardinality_ < 2) throw ArityMismatch(child_ + ": cardinality must be >= 2");
  if (parents_.size() != parent_cards_.size()) {
    throw ArityMismatch(child_ + ": parent names and cardinalities differ in length");
  }
  for (std::size_t i = 0; i < parents_.size(); ++i) {
    if (parent_cards_[i] < 2) throw ArityMismatch(child_ + ": parent cardinality < 2");
    if (std::count(parents_.begin(), parents_.end(), parents_[i]) != 1) {
      throw InvalidNetwork(child_ + ": duplicate parent " + parents_[i]);
    }
    config_count_ *= static_cast<std::size_t>(parent_cards_[i]);
  }
  if (values_.size() != config_count_ * static_cast<std::size_t>(cardinality_)) {
    throw ArityMismatch(child_ + ": table has " + std::to_string(values_.size()) +
                        " entries, expected " +
                        std::to_string(config_count_ * static_cast<std::size_t>(cardinality_)));
  }
  for (std::size_t c = 0; c < config_count_; ++c) {
    try {
      validate_probabilities(column(c));
    } catch (const InvalidDistribution& e) {
      throw InvalidDistribution(child_ + " column " + std::to_string(c) + ": " + e.what());
    }
  }
}

ConditionalTable ConditionalTable::uniform(std::string child, int cardinality,
                                           std::vector<std::string> parents,
                                           std::vector<int> parent_cardinalities) {
  std::size_t configs = 1;
  for (int c : parent_cardinalities) configs *= static_cast<std::size_t>(c);
  std::vector<double> values(configs * static_cast<std::size_t>(cardinality),
                             1.0 / static_cast<double>(cardinality));
  return ConditionalTable(std::move(child), cardinality, std::move(parents),
                          std::move(parent_cardinalities), std::move(values));
}

std::size_t ConditionalTable::config_index(std::span<const int> parent_values) const {
  if (parent_values.size() != parents_.size()) {
    throw ArityMismatch(child_ + ": expected " + std::to_string(parents_.size()) +
                        " parent values");
  }
  std::size_t index = 0;
  for (std::size_t i = 0; i < parents_.size(); ++i) {
    if (parent_values[i] < 0 || parent_values[i] >= parent_cards_[i]) {
      throw ArityMismatch(child_ + ": parent " + parents_[i] + " value out of range");
    }
    index = index * static_cast<std::size_t>(parent_cards_[i]) +
            static_cast<std::size_t>(parent_values[i]);
  }
  return index;
}

std::vector<int> ConditionalTable::config_values(std::size_t config) const {
  std::vector<int> out(parents_.size());
  for (std::size_t i = parents_.size(); i-- > 0;) {
    const auto card = static_cast<std::size_t>(parent_cards_[i]);
    out[i] = static_cast<int>(config % card);
    config /= card;
  }
  return out;
}

Distribution ConditionalTable::distribution(std::size_t config) const {
  const auto col = column(config);
  return Distribution::from_probs(std::vector<double>(col.begin(), col.end()));
}

void ConditionalTable::set_column(std::size_t config, std::span<const double> probs) {
  if (config >= config_count_) throw IndexOutOfRange(child_ + ": configuration index");
  if (probs.size() != static_cast<std::size_t>(cardinality_)) {
    throw ArityMismatch(child_ + ": column length");
  }
  validate_probabilities(probs);
  std::copy(probs.begin(), probs.end(),
            values_.begin() + static_cast<std::ptrdiff_t>(config) * cardinality_);
}

std::optional<std::size_t> ConditionalTable::parent_position(std::string_view name) const {
  for (std::size_t i = 0; i < parents_.size(); ++i) {
    if (parents_[i] == name) return i;
  }
  return std::nullopt;
}

double step_forward_energy(int sf) { return 1.0 + 0.1 * std::sqrt(static_cast<double>(sf)); }

double step_aside_energy(int sa) {
  return 1.0 + 0.1 * std::sqrt(static_cast<double>(std::abs(sa - 5)));
}

double utility(const DiscreteObservation& obs, const DiscreteAction& act) {
  const double energy = step_forward_energy(act.step_forward) + step_aside_energy(act.step_aside);
  if (obs.barrier_tactile == 1) return -10.0 - energy;
  return -2.0 * obs.depth - std::abs(obs.heading_angle - 5) + 10.0 * obs.target_in_visual_field -
         energy;
}

double UtilityModel::operator()(const DiscreteObservation& obs, const DiscreteAction& act) const {
  return scale * utility(obs, act) + offset;
}

TwoSliceNetwork::TwoSliceNetwork(std::vector<ConditionalTable> observation_cpts,
                                 std::optional<ConditionalTable> hidden_cpt, UtilityModel utility)
    : hidden_cpt_(std::move(hidden_cpt)), utility_(utility) {
  if (!(utility_.scale > 0.0)) throw InvalidNetwork("utility scale must be positive");
  std::vector<std::optional<ConditionalTable>> slots(vars::kObservationNames.size());
  for (auto& table : observation_cpts) {
    const int idx = observation_var_index(table.child());
    if (idx < 0) throw UnknownVariable("CPT for unknown chance node '" + table.child() + "'");
    auto& slot = slots[static_cast<std::size_t>(idx)];
    if (slot) throw InvalidNetwork("two CPTs for " + table.child());
    if (table.cardinality() != vars::kObservationCards[static_cast<std::size_t>(idx)]) {
      throw ArityMismatch(table.child() + " cardinality");
    }
    slot = std::move(table);
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw MissingCPT(std::string(vars::kObservationNames[i]));
    observation_cpts_.push_back(std::move(*slots[i]));
  }
  if (hidden_cpt_) {
    if (hidden_cpt_->child() != vars::kHidden) throw InvalidNetwork("hidden CPT must be for HV");
    if (hidden_cpt_->cardinality() != vars::kHiddenCardinality) {
      throw ArityMismatch("HV must be binary");
    }
  }
  resolve();
}

void TwoSliceNetwork::resolve() {
  observation_refs_.clear();
  for (const auto& table : observation_cpts_) {
    std::vector<ParentRef> refs;
    for (std::size_t i = 0; i < table.parents().size(); ++i) {
      refs.push_back(
          resolve_parent(table.parents()[i], table.parent_cardinalities()[i], has_hidden()));
    }
    observation_refs_.push_back(std::move(refs));
  }
  hidden_refs_.clear();
  if (hidden_cpt_) {
    for (std::size_t i = 0; i < hidden_cpt_->parents().size(); ++i) {
      const ParentRef ref = resolve_parent(hidden_cpt_->parents()[i],
                                           hidden_cpt_->parent_cardinalities()[i], true);
      // Restricting HV to slice-t observation parents keeps the two-slice
      // graph acyclic.
      if (ref.source != ParentRef::Source::observation) {
        throw InvalidNetwork("HV parents must be slice-t observation variables");
      }
      hidden_refs_.push_back(ref);
    }
  }
}

std::vector<VariableSpec> TwoSliceNetwork::variables() const {
  std::vector<VariableSpec> out;
  for (std::size_t i = 0; i < vars::kObservationNames.size(); ++i) {
    out.push_back({std::string(vars::kObservationNames[i]), NodeKind::chance,
                   vars::kObservationCards[i]});
  }
  out.push_back({std::string(vars::kStepForward), NodeKind::decision,
                 vars::kStepForwardCategories});
  out.push_back({std::string(vars::kStepAside), NodeKind::decision, vars::kStepAsideCategories});
  if (hidden_cpt_) {
    out.push_back({std::string(vars::kHidden), NodeKind::hidden, vars::kHiddenCardinality});
  }
  out.push_back({"U", NodeKind::utility, 0});
  return out;
}

const ConditionalTable& TwoSliceNetwork::cpt(std::string_view child) const {
  if (child == vars::kHidden) return hidden_cpt();
  const int idx = observation_var_index(child);
  if (idx < 0) throw MissingCPT("no CPT for '" + std::string(child) + "'");
  return observation_cpts_[static_cast<std::size_t>(idx)];
}

const ConditionalTable& TwoSliceNetwork::hidden_cpt() const {
  if (!hidden_cpt_) throw NoHiddenVariable("network has no hidden variable");
  return *hidden_cpt_;
}

std::vector<Edge> TwoSliceNetwork::inter_edges() const {
  std::vector<Edge> edges;
  for (const auto& table : observation_cpts_) {
    for (const auto& parent : table.parents()) {
      if (parent == vars::kHidden) continue;
      edges.push_back({parent, 0, table.child(), 1});
    }
  }
  if (hidden_cpt_) {
    for (const auto& parent : hidden_cpt_->parents()) {
      edges.push_back({parent, 0, std::string(vars::kHidden), 1});
    }
  }
  return edges;
}

std::vector<Edge> TwoSliceNetwork::intra_edges() const {
  std::vector<Edge> edges;
  for (const auto& table : observation_cpts_) {
    if (table.parent_position(vars::kHidden)) {
      edges.push_back({std::string(vars::kHidden), 1, table.child(), 1});
    }
  }
  for (const auto& name : vars::kObservationNames) {
    edges.push_back({std::string(name), 1, "U", 1});
  }
  edges.push_back({std::string(vars::kStepForward), 0, "U", 1});
  edges.push_back({std::string(vars::kStepAside), 0, "U", 1});
  return edges;
}

TwoSliceNetwork TwoSliceNetwork::with_cpt(ConditionalTable table) const {
  std::vector<ConditionalTable> obs = observation_cpts_;
  std::optional<ConditionalTable> hidden = hidden_cpt_;
  if (table.child() == vars::kHidden) {
    hidden = std::move(table);
  } else {
    const int idx = observation_var_index(table.child());
    if (idx < 0) throw UnknownVariable(table.child());
    obs[static_cast<std::size_t>(idx)] = std::move(table);
  }
  return TwoSliceNetwork(std::move(obs), std::move(hidden), utility_);
}

TwoSliceNetwork TwoSliceNetwork::with_utility(UtilityModel utility) const {
  return TwoSliceNetwork(observation_cpts_, hidden_cpt_, utility);
}

std::size_t TwoSliceNetwork::config_for(const ConditionalTable& table,
                                        const std::vector<ParentRef>& refs,
                                        const DiscreteObservation& obs_t,
                                        const DiscreteAction& act, int hv) const {
  std::size_t index = 0;
  const auto& cards = table.parent_cardinalities();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    int value = 0;
    switch (refs[i].source) {
      case ParentRef::Source::observation:
        value = observation_value(obs_t, static_cast<std::size_t>(refs[i].index));
        break;
      case ParentRef::Source::decision:
        value = refs[i].index == 0 ? act.step_forward : act.step_aside;
        break;
      case ParentRef::Source::hidden:
        value = hv;
        break;
    }
    if (value < 0 || value >= cards[i]) {
      throw ArityMismatch(table.child() + ": value of parent " + table.parents()[i] +
                          " out of range");
    }
    index = index * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(value);
  }
  return index;
}

std::size_t TwoSliceNetwork::observation_config(std::size_t var, const DiscreteObservation& obs_t,
                                                const DiscreteAction& act, int hv) const {
  return config_for(observation_cpts_.at(var), observation_refs_.at(var), obs_t, act, hv);
}

std::size_t TwoSliceNetwork::hidden_config(const DiscreteObservation& obs_t) const {
  return config_for(hidden_cpt(), hidden_refs_, obs_t, DiscreteAction{}, 0);
}

double max_abs_cpt_difference(const TwoSliceNetwork& a, const TwoSliceNetwork& b) {
  auto diff = [](const ConditionalTable& x, const ConditionalTable& y) {
    if (x.parents() != y.parents() || x.values().size() != y.values().size()) {
      throw InvalidNetwork("networks differ in structure for " + x.child());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < x.values().size(); ++i) {
      m = std::max(m, std::abs(x.values()[i] - y.values()[i]));
    }
    return m;
  };
  if (a.has_hidden() != b.has_hidden()) throw InvalidNetwork("only one network has HV");
  double m = 0.0;
  for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
    m = std::max(m, diff(a.observation_cpt(v), b.observation_cpt(v)));
  }
  if (a.has_hidden()) m = std::max(m, diff(a.hidden_cpt(), b.hidden_cpt()));
  return m;
}

namespace {

nlohmann::json table_to_json(const ConditionalTable& t) {
  nlohmann::json columns = nlohmann::json::array();
  for (std::size_t c = 0; c < t.config_count(); ++c) {
    const auto col = t.column(c);
    columns.push_back(std::vector<double>(col.begin(), col.end()));
  }
  return {{"child", t.child()},
          {"cardinality", t.cardinality()},
          {"parents", t.parents()},
          {"parent_cardinalities", t.parent_cardinalities()},
          {"table", std::move(columns)}};
}

ConditionalTable table_from_json(const nlohmann::json& j) {
  std::vector<double> values;
  for (const auto& column : j.at("table")) {
    for (const auto& v : column) values.push_back(v.get<double>());
  }
  return ConditionalTable(j.at("child").get<std::string>(), j.at("cardinality").get<int>(),
                          j.at("parents").get<std::vector<std::string>>(),
                          j.at("parent_cardinalities").get<std::vector<int>>(), std::move(values));
}

}  // namespace

nlohmann::json to_json(const TwoSliceNetwork& net) {
  nlohmann::json variables = nlohmann::json::array();
  for (const auto& v : net.variables()) {
    variables.push_back(
        {{"name", v.name}, {"kind", std::string(to_string(v.kind))}, {"cardinality", v.cardinality}});
  }
  auto edges_json = [](const std::vector<Edge>& edges) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : edges) {
      out.push_back({{"from", e.from},
                     {"from_slice", e.from_slice},
                     {"to", e.to},
                     {"to_slice", e.to_slice}});
    }
    return out;
  };
  nlohmann::json cpts = nlohmann::json::array();
  for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
    cpts.push_back(table_to_json(net.observation_cpt(v)));
  }
  if (net.has_hidden()) cpts.push_back(table_to_json(net.hidden_cpt()));
  return {{"schema", kSchema},
          {"variables", std::move(variables)},
          {"inter_edges", edges_json(net.inter_edges())},
          {"intra_edges", edges_json(net.intra_edges())},
          {"cpts", std::move(cpts)},
          {"utility",
           {{"kind", "detour"},
            {"scale", net.utility_model().scale},
            {"offset", net.utility_model().offset}}}};
}

TwoSliceNetwork network_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchema) {
      throw ParseError("unsupported network schema " + j.at("schema").get<std::string>());
    }
    std::vector<ConditionalTable> obs;
    std::optional<ConditionalTable> hidden;
    for (const auto& t : j.at("cpts")) {
      auto table = table_from_json(t);
      if (table.child() == vars::kHidden) {
        hidden = std::move(table);
      } else {
        obs.push_back(std::move(table));
      }
    }
    UtilityModel u;
    if (j.contains("utility")) {
      u.scale = j["utility"].value("scale", 1.0);
      u.offset = j["utility"].value("offset", 0.0);
    }
    return TwoSliceNetwork(std::move(obs), std::move(hidden), u);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network document: ") + e.what());
  }
}

}  // namespace detour::network
