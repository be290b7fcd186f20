#include "detour/agent.hpp"

#include <algorithm>
#include <cmath>

#include "detour/errors.hpp"
#include "detour/initial_network.hpp"

namespace detour::agent {
namespace {

int observation_index(std::string_view name) {
  for (std::size_t i = 0; i < vars::kObservationNames.size(); ++i) {
    if (vars::kObservationNames[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> canonical_subset(const std::vector<std::string>& names,
                                          const char* role) {
  std::array<bool, 4> present{};
  for (const auto& n : names) {
    const int idx = observation_index(n);
    if (idx < 0) throw UnknownVariable(std::string(role) + " '" + n + "' is not an observation");
    present[static_cast<std::size_t>(idx)] = true;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i]) out.emplace_back(vars::kObservationNames[i]);
  }
  return out;
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : -kInfinity; }

// Where each record lands in the tables EM touches.
struct RecordIndex {
  std::size_t hidden_config = 0;
  std::vector<std::array<std::size_t, 2>> child_config;  // per child, per HV value
  std::vector<int> child_value;
  double weight = 1.0;
  double influence_p0 = 0.5;
};

struct EmTables {
  network::ConditionalTable hidden;
  std::vector<network::ConditionalTable> children;
};

double complete_loglik(const EmTables& tables, const std::vector<RecordIndex>& index,
                       const std::vector<int>& hv) {
  double total = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int h = hv[i];
    double ll = safe_log(tables.hidden.probability(index[i].hidden_config, h));
    for (std::size_t c = 0; c < tables.children.size(); ++c) {
      ll += safe_log(tables.children[c].probability(
          index[i].child_config[c][static_cast<std::size_t>(h)], index[i].child_value[c]));
    }
    total += index[i].weight * ll;
  }
  return total;
}

double prior_term(const network::ConditionalTable& table, const std::vector<double>& prior) {
  double total = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (prior[k] > 0.0) total += prior[k] * safe_log(table.values()[k]);
  }
  return total;
}

double max_abs_diff(const network::ConditionalTable& a, const network::ConditionalTable& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

network::ConditionalTable estimate(const network::ConditionalTable& shape,
                                   const std::vector<double>& counts,
                                   const std::vector<double>& prior) {
  const auto k = static_cast<std::size_t>(shape.cardinality());
  std::vector<double> values(counts.size());
  for (std::size_t c = 0; c < shape.config_count(); ++c) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += counts[c * k + j] + prior[c * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      values[c * k + j] = total > 0.0 ? (counts[c * k + j] + prior[c * k + j]) / total
                                      : shape.probability(c, static_cast<int>(j));
    }
    // Exact renormalisation keeps every column inside the 1e-9 tolerance.
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += values[c * k + j];
    for (std::size_t j = 0; j < k; ++j) values[c * k + j] /= s;
  }
  return network::ConditionalTable(shape.child(), shape.cardinality(), shape.parents(),
                                   shape.parent_cardinalities(), std::move(values));
}

}  // namespace

void AgentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigInvalid("alpha must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigInvalid("epsilon must be positive");
  if (max_iters < 1) throw ConfigInvalid("max_iters must be >= 1");
  if (epoch_budget < 1) throw ConfigInvalid("epoch_budget must be >= 1");
  if (steps_per_epoch < 1) throw ConfigInvalid("steps_per_epoch must be >= 1");
  if (min_rejections < 1) throw ConfigInvalid("min_rejections must be >= 1");
  if (!(map_prior_strength >= 0.0)) throw ConfigInvalid("map_prior_strength must be >= 0");
  if (!(heading_balance >= 0.0 && heading_balance <= 1.0)) {
    throw ConfigInvalid("heading_balance must lie in [0, 1]");
  }
}

HiddenVariableSpec xm_spec(const std::vector<std::string>& selected) {
  HiddenVariableSpec spec;
  spec.parents = selected;
  spec.children = selected;
  return spec;
}

double utility_surprise(const inference::UtilityDistribution& u_dist, double realized_u,
                        double meu) {
  const double diff = realized_u - meu;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  if (sign == 0.0) return 0.0;
  const auto atom = u_dist.find(realized_u);
  if (!atom || u_dist.probs[*atom] <= 0.0) return sign * kInfinity;
  return sign * surprise::surprise_coefficient(*atom, u_dist.probs);
}

StepRecord detect_step(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                       const DiscreteAction& act, const DiscreteObservation& obs_t1,
                       double alpha) {
  StepRecord r;
  r.obs_t = obs_t;
  r.obs_t1 = obs_t1;
  r.action = act;
  const auto u_dist = inference::utility_distribution(net, obs_t, act);
  r.meu = u_dist.mean();
  r.realized_utility = net.utility_model()(obs_t1, act);
  r.c_u = utility_surprise(u_dist, r.realized_utility, r.meu);
  r.influence_p0 = surprise::influence_probability(r.c_u);
  const auto marginals = inference::predict_marginals(net, obs_t, act);
  for (std::size_t v = 0; v < marginals.size(); ++v) {
    r.per_variable[v] = surprise::surprise_test(
        static_cast<std::size_t>(observation_value(obs_t1, v)), marginals[v], alpha);
  }
  return r;
}

void assign_weights(std::vector<StepRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].weight =
        i == 0 ? 1.0
               : 1.0 + std::abs(records[i - 1].realized_utility - records[i].realized_utility);
  }
}

std::array<int, 4> rejection_counts(const std::vector<StepRecord>& records) {
  std::array<int, 4> counts{};
  for (const auto& r : records) {
    if (!(r.influence_p0 < 0.5)) continue;
    for (std::size_t v = 0; v < counts.size(); ++v) {
      if (r.per_variable[v].rejected) ++counts[v];
    }
  }
  return counts;
}

std::vector<std::string> select_related_variables(const EpochSummary& epoch, int min_rejections) {
  const auto counts = rejection_counts(epoch.records);
  std::vector<std::string> out;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] >= min_rejections) out.emplace_back(vars::kObservationNames[v]);
  }
  return out;
}

network::TwoSliceNetwork insert_hidden_variable(const network::TwoSliceNetwork& net,
                                                const HiddenVariableSpec& spec) {
  if (net.has_hidden()) throw DuplicateHidden("network already has a hidden variable");
  if (spec.name != vars::kHidden) throw InvalidNetwork("hidden variable must be named HV");
  if (spec.cardinality != vars::kHiddenCardinality) throw ArityMismatch("HV must be binary");
  if (spec.parents.empty() || spec.children.empty()) {
    throw InvalidNetwork("hidden variable needs at least one parent and one child");
  }
  const auto parents = canonical_subset(spec.parents, "parent");
  const auto children = canonical_subset(spec.children, "child");

  std::vector<int> parent_cards;
  for (const auto& p : parents) {
    parent_cards.push_back(vars::kObservationCards[static_cast<std::size_t>(observation_index(p))]);
  }
  auto hidden = network::ConditionalTable::uniform(std::string(vars::kHidden),
                                                   vars::kHiddenCardinality, parents, parent_cards);

  std::vector<network::ConditionalTable> tables;
  for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
    const auto& old = net.observation_cpt(v);
    if (std::find(children.begin(), children.end(), old.child()) == children.end()) {
      tables.push_back(old);
      continue;
    }
    auto new_parents = old.parents();
    auto new_cards = old.parent_cardinalities();
    new_parents.emplace_back(vars::kHidden);
    new_cards.push_back(vars::kHiddenCardinality);
    std::vector<double> values;
    values.reserve(old.values().size() * 2);
    for (std::size_t c = 0; c < old.config_count(); ++c) {
      const auto col = old.column(c);
      for (int hv = 0; hv < vars::kHiddenCardinality; ++hv) {
        values.insert(values.end(), col.begin(), col.end());
      }
    }
    tables.emplace_back(old.child(), old.cardinality(), std::move(new_parents),
                        std::move(new_cards), std::move(values));
  }
  return network::TwoSliceNetwork(std::move(tables), std::move(hidden), net.utility_model());
}

std::array<double, 2> hidden_posterior(const network::TwoSliceNetwork& net,
                                       const StepRecord& record) {
  const auto& hidden = net.hidden_cpt();
  const std::size_t hc = net.hidden_config(record.obs_t);
  std::array<double, 2> post{};
  for (int h = 0; h < 2; ++h) {
    double p = hidden.probability(hc, h);
    for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
      const auto& table = net.observation_cpt(v);
      if (!table.parent_position(vars::kHidden)) continue;
      p *= table.probability(net.observation_config(v, record.obs_t, record.action, h),
                             observation_value(record.obs_t1, v));
    }
    post[static_cast<std::size_t>(h)] = p;
  }
  const double total = post[0] + post[1];
  if (total > 0.0) {
    post[0] /= total;
    post[1] /= total;
  } else {
    post = {0.5, 0.5};
  }
  return post;
}

EmResult hard_weighted_em(const network::TwoSliceNetwork& net,
                          const std::vector<StepRecord>& data, const EmOptions& options) {
  if (!net.has_hidden()) throw NoHiddenVariable("EM needs a network with HV");
  if (data.empty()) throw EmptyData("no records to learn from");

  std::vector<std::size_t> child_vars;
  for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
    if (net.observation_cpt(v).parent_position(vars::kHidden)) child_vars.push_back(v);
  }

  // Dirichlet pseudo-counts per table entry.
  const std::vector<double> hidden_prior(net.hidden_cpt().values().size(), 1.0);
  std::vector<std::vector<double>> child_prior;
  for (std::size_t v : child_vars) {
    const auto& table = net.observation_cpt(v);
    const auto k = static_cast<std::size_t>(table.cardinality());
    std::vector<double> prior(table.values().size());
    for (std::size_t c = 0; c < table.config_count(); ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        double centre = 1.0 / static_cast<double>(k);
        if (options.prior_reference == PriorReference::previous) {
          // HV is the last parent, so config c of the enlarged table comes
          // from config c / 2 of the table it was built from.
          if (v < options.reference_tables.size() && options.reference_tables[v]) {
            const auto& ref = *options.reference_tables[v];
            if (ref.config_count() * 2 != table.config_count() || ref.cardinality() != table.cardinality()) {
              throw ArityMismatch("reference table for " + table.child() + " does not match");
            }
            centre = ref.probability(c / 2, static_cast<int>(j));
          } else {
            centre = table.probability(c - c % 2, static_cast<int>(j));
          }
        }
        prior[c * k + j] = options.prior_strength * centre;
      }
    }
    child_prior.push_back(std::move(prior));
  }

  std::vector<RecordIndex> index;
  index.reserve(data.size());
  for (const auto& r : data) {
    RecordIndex ri;
    ri.hidden_config = net.hidden_config(r.obs_t);
    for (std::size_t v : child_vars) {
      ri.child_config.push_back({net.observation_config(v, r.obs_t, r.action, 0),
                                 net.observation_config(v, r.obs_t, r.action, 1)});
      ri.child_value.push_back(observation_value(r.obs_t1, v));
    }
    ri.weight = r.weight;
    ri.influence_p0 = r.influence_p0;
    index.push_back(std::move(ri));
  }

  EmTables current{net.hidden_cpt(), {}};
  for (std::size_t v : child_vars) current.children.push_back(net.observation_cpt(v));

  CounterRng rng = CounterRng(options.seed).substream(kEmStreamTag);
  EmResult result{net, {}, false};
  std::vector<int> hv(data.size(), 0);
  std::vector<int> previous_hv;

  for (int it = 0; it < options.max_iters; ++it) {
    // E-step.
    for (std::size_t i = 0; i < index.size(); ++i) {
      double p1 = 0.0;
      if (it == 0) {
        p1 = 1.0 - index[i].influence_p0;
      } else {
        double lp[2];
        for (int h = 0; h < 2; ++h) {
          double l = safe_log(current.hidden.probability(index[i].hidden_config, h));
          for (std::size_t c = 0; c < current.children.size(); ++c) {
            l += safe_log(current.children[c].probability(
                index[i].child_config[c][static_cast<std::size_t>(h)], index[i].child_value[c]));
          }
          lp[h] = l;
        }
        if (lp[0] == -kInfinity && lp[1] == -kInfinity) {
          p1 = 0.0;
        } else if (lp[1] == -kInfinity) {
          p1 = 0.0;
        } else if (lp[0] == -kInfinity) {
          p1 = 1.0;
        } else {
          p1 = 1.0 / (1.0 + std::exp(lp[0] - lp[1]));
        }
      }
      if (options.imputation == Imputation::sampled) {
        hv[i] = rng.uniform() < p1 ? 1 : 0;
      } else {
        hv[i] = p1 > 0.5 ? 1 : 0;
      }
    }

    EmIteration log;
    log.iteration = it;
    for (std::size_t i = 0; i < hv.size(); ++i) {
      log.hv_ones += hv[i];
      if (hv[i] == 1) log.weighted_hv_ones += index[i].weight;
    }
    log.loglik_before = complete_loglik(current, index, hv);
    log.objective_before = log.loglik_before + prior_term(current.hidden, hidden_prior);
    for (std::size_t c = 0; c < current.children.size(); ++c) {
      log.objective_before += prior_term(current.children[c], child_prior[c]);
    }

    // M-step: weighted counts plus pseudo-counts.
    std::vector<double> hidden_counts(current.hidden.values().size(), 0.0);
    std::vector<std::vector<double>> child_counts;
    for (const auto& t : current.children) child_counts.emplace_back(t.values().size(), 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto h = static_cast<std::size_t>(hv[i]);
      hidden_counts[index[i].hidden_config * 2 + h] += index[i].weight;
      for (std::size_t c = 0; c < child_counts.size(); ++c) {
        const auto k = static_cast<std::size_t>(current.children[c].cardinality());
        child_counts[c][index[i].child_config[c][h] * k +
                        static_cast<std::size_t>(index[i].child_value[c])] += index[i].weight;
      }
    }
    EmTables next{estimate(current.hidden, hidden_counts, hidden_prior), {}};
    for (std::size_t c = 0; c < current.children.size(); ++c) {
      next.children.push_back(estimate(current.children[c], child_counts[c], child_prior[c]));
    }

    log.loglik_after = complete_loglik(next, index, hv);
    log.objective_after = log.loglik_after + prior_term(next.hidden, hidden_prior);
    for (std::size_t c = 0; c < next.children.size(); ++c) {
      log.objective_after += prior_term(next.children[c], child_prior[c]);
    }
    log.max_delta = max_abs_diff(current.hidden, next.hidden);
    for (std::size_t c = 0; c < next.children.size(); ++c) {
      log.max_delta = std::max(log.max_delta, max_abs_diff(current.children[c], next.children[c]));
    }
    current = std::move(next);
    result.log.push_back(log);
    const bool settled = it > 0 && hv == previous_hv;
    previous_hv = hv;
    if (log.max_delta <= options.epsilon || settled) {
      result.converged = true;
      break;
    }
  }

  network::TwoSliceNetwork out = net.with_cpt(current.hidden);
  for (auto& t : current.children) out = out.with_cpt(std::move(t));
  result.network = std::move(out);
  return result;
}

EpochResult run_epoch(const network::TwoSliceNetwork& net, const env::WorldConfig& world,
                      const AgentConfig& config, const CounterRng& rng, int epoch_index) {
  EpochResult out;
  out.summary.epoch = epoch_index;
  env::WorldState state = env::WorldState::initial(world);
  DiscreteObservation obs = env::discretize(env::observe(state), world);
  for (int t = 0; t < config.steps_per_epoch; ++t) {
    const auto decision = inference::select_action_meu(net, obs);
    const auto step = env::env_step(state, decision.action, rng.substream(static_cast<std::uint64_t>(t)));
    const DiscreteObservation next = env::discretize(step.observation, world);
    StepRecord rec = detect_step(net, obs, decision.action, next, config.alpha);
    rec.epoch = epoch_index;
    rec.t = t;
    out.summary.records.push_back(rec);
    out.trajectory.push_back({t, step.state.agent_position.x, step.state.agent_position.y,
                              decision.action.step_forward, decision.action.step_aside,
                              step.sampled.step_forward, step.sampled.step_aside,
                              step.observation.barrier_tactile,
                              step.observation.target_in_visual_field, step.observation.depth,
                              step.observation.heading_angle});
    if (next.barrier_tactile == 1) ++out.summary.barrier_events;
    state = step.state;
    obs = next;
    if (next.target_in_visual_field == 1) {
      out.summary.reached_target = true;
      break;
    }
  }
  assign_weights(out.summary.records);
  out.summary.rejection_counts = rejection_counts(out.summary.records);
  out.summary.selected_variables = select_related_variables(out.summary, config.min_rejections);
  out.summary.detected = !out.summary.selected_variables.empty();
  return out;
}

CounterRng epoch_stream(std::uint64_t seed, int epoch) {
  return CounterRng(seed).substream(kEpochStreamTag).substream(static_cast<std::uint64_t>(epoch));
}

LearningResult run_learning_process(const env::WorldConfig& world, const AgentConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  world.validate();
  const auto initial = network::build_initial_network(config.heading_balance);
  LearningResult result{initial, initial, {}, std::nullopt, {}, {}, {}, false};
  network::TwoSliceNetwork net = initial;
  std::vector<std::optional<network::ConditionalTable>> reference(vars::kObservationNames.size());

  for (int e = 0; e < config.epoch_budget; ++e) {
    result.epochs.push_back(run_epoch(net, world, config, epoch_stream(seed, e), e));
    const EpochSummary& summary = result.epochs.back().summary;
    if (!result.insertion_epoch) {
      if (!summary.detected) continue;
      result.insertion_epoch = e;
      result.selected_variables = summary.selected_variables;
      for (const auto& name : summary.selected_variables) {
        const auto v = static_cast<std::size_t>(observation_index(name));
        reference[v] = net.observation_cpt(v);
      }
      net = insert_hidden_variable(net, xm_spec(summary.selected_variables));
    }
    EmOptions options;
    options.epsilon = config.epsilon;
    options.max_iters = config.max_iters;
    options.prior_strength = config.map_prior_strength;
    options.prior_reference = config.prior_reference;
    options.imputation = config.imputation;
    options.reference_tables = reference;
    options.seed = CounterRng(seed).substream(kEmStreamTag).substream(static_cast<std::uint64_t>(e)).next_u64();
    auto em = hard_weighted_em(net, summary.records, options);
    const double delta = network::max_abs_cpt_difference(net, em.network);
    result.em_logs.push_back(std::move(em.log));
    result.epoch_deltas.push_back(delta);
    net = std::move(em.network);
    if (e > *result.insertion_epoch && delta <= config.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.final_network = net;
  return result;
}

std::vector<EpochResult> run_fixed(const network::TwoSliceNetwork& net,
                                   const env::WorldConfig& world, const AgentConfig& config,
                                   std::uint64_t seed, int epochs) {
  config.validate();
  world.validate();
  std::vector<EpochResult> out;
  for (int e = 0; e < epochs; ++e) {
    out.push_back(run_epoch(net, world, config, epoch_stream(seed, e), e));
  }
  return out;
}

}  // namespace detour::agent
