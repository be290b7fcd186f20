#include "detour/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "detour/errors.hpp"
#include "detour/surprise.hpp"

namespace detour::discovery {
namespace {

// Mixed-radix code of the conditioning tuple at sample i.
std::uint64_t encode(const std::vector<std::span<const int>>& given, const std::vector<int>& cards,
                     std::size_t i) {
  std::uint64_t key = 0;
  for (std::size_t v = 0; v < given.size(); ++v) {
    key = key * static_cast<std::uint64_t>(cards[v]) + static_cast<std::uint64_t>(given[v][i]);
  }
  return key;
}

struct Counts {
  std::map<std::uint64_t, double> given;
  std::map<std::pair<std::uint64_t, int>, double> joint;
  double n = 0.0;
};

Counts count(std::span<const int> target, const std::vector<std::span<const int>>& given,
             const std::vector<int>& cards) {
  Counts c;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::uint64_t key = encode(given, cards, i);
    c.given[key] += 1.0;
    c.joint[{key, target[i]}] += 1.0;
    c.n += 1.0;
  }
  return c;
}

double entropy_from(const Counts& c) {
  if (c.n == 0.0) return 0.0;
  double h = 0.0;
  for (const auto& [kt, n_kt] : c.joint) {
    h -= n_kt / c.n * std::log(n_kt / c.given.at(kt.first));
  }
  return std::max(h, 0.0);
}

void check_aligned(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DomainMismatch("sample columns have different lengths");
}

// Slice-t and slice-(t+1) views of a log column over the given window ends.
struct Lagged {
  std::vector<int> now;
  std::vector<int> past;
};

Lagged lagged(const Column& c, const std::vector<std::size_t>& ends, int k) {
  Lagged out;
  out.now.reserve(ends.size());
  out.past.reserve(ends.size());
  for (std::size_t t : ends) {
    out.now.push_back(c.values[t]);
    out.past.push_back(c.values[t - static_cast<std::size_t>(k)]);
  }
  return out;
}

double slice_entropy(const SampleLog& log, const std::vector<std::size_t>& ends,
                     const std::string& target, const std::vector<std::string>& given) {
  const Column& tc = log.column(target);
  const Lagged t = lagged(tc, ends, 1);
  std::vector<std::vector<int>> store;
  store.reserve(given.size());
  std::vector<int> cards;
  for (const auto& name : given) {
    const Column& c = log.column(name);
    store.push_back(lagged(c, ends, 1).past);
    cards.push_back(c.cardinality);
  }
  std::vector<std::span<const int>> spans(store.begin(), store.end());
  return conditional_entropy(t.now, tc.cardinality, spans, cards);
}

}  // namespace

void SampleLog::add_column(std::string name, int cardinality, std::vector<int> values) {
  if (cardinality < 1) throw IndexOutOfRange("cardinality must be positive");
  if (has_column(name)) throw DomainMismatch("duplicate column " + name);
  if (!columns_.empty() && values.size() != length_) {
    throw DomainMismatch("column " + name + " has length " + std::to_string(values.size()) +
                         ", expected " + std::to_string(length_));
  }
  for (int v : values) {
    if (v < 0 || v >= cardinality) {
      throw IndexOutOfRange("value " + std::to_string(v) + " outside column " + name);
    }
  }
  length_ = values.size();
  columns_.push_back(Column{std::move(name), cardinality, std::move(values)});
}

void SampleLog::start_segment(std::size_t t) {
  if (t >= length_) throw IndexOutOfRange("segment start beyond the log");
  if (t == 0) return;
  const auto it = std::lower_bound(segment_starts_.begin(), segment_starts_.end(), t);
  if (it == segment_starts_.end() || *it != t) segment_starts_.insert(it, t);
}

const Column& SampleLog::column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw UnknownVariable("no column " + name);
}

bool SampleLog::has_column(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

std::vector<std::size_t> SampleLog::window_ends(int lag) const {
  if (lag < 1) throw IndexOutOfRange("lag must be at least 1");
  const auto l = static_cast<std::size_t>(lag);
  std::vector<std::size_t> out;
  std::size_t seg_begin = 0;
  std::size_t next = 0;
  for (std::size_t t = 0; t < length_; ++t) {
    if (next < segment_starts_.size() && segment_starts_[next] == t) {
      seg_begin = t;
      ++next;
    }
    if (t >= seg_begin + l) out.push_back(t);
  }
  return out;
}

const char* to_string(EdgeKind kind) { return kind == EdgeKind::intra ? "intra" : "inter"; }

Distribution empirical_distribution(std::span<const int> values, int cardinality) {
  if (cardinality < 1) throw IndexOutOfRange("cardinality must be positive");
  std::vector<double> counts(static_cast<std::size_t>(cardinality), 0.0);
  for (int v : values) {
    if (v < 0 || v >= cardinality) throw IndexOutOfRange("sample outside the declared domain");
    counts[static_cast<std::size_t>(v)] += 1.0;
  }
  if (values.empty()) throw InsufficientData("no samples");
  return Distribution::from_counts(counts);
}

double causal_coefficient(const Distribution& x, const Distribution& y) {
  if (x.size() < 2 || y.size() < 2) {
    throw CardinalityOne("normalisation needs at least two outcomes");
  }
  const double hx = surprise::entropy(x) / std::log(static_cast<double>(x.size()));
  const double hy = surprise::entropy(y) / std::log(static_cast<double>(y.size()));
  return hx - hy;
}

double conditional_entropy(std::span<const int> target, int target_card,
                           const std::vector<std::span<const int>>& given,
                           const std::vector<int>& given_cards) {
  if (given.size() != given_cards.size()) throw ArityMismatch("one cardinality per given column");
  for (const auto& g : given) check_aligned(target, g);
  for (int v : target) {
    if (v < 0 || v >= target_card) throw IndexOutOfRange("target sample outside its domain");
  }
  return entropy_from(count(target, given, given_cards));
}

double causal_action_coefficient(std::span<const int> o, int o_card, std::span<const int> d,
                                 int d_card) {
  check_aligned(o, d);
  const double h = conditional_entropy(o, o_card, {}, {});
  const double h_given = conditional_entropy(o, o_card, {d}, {d_card});
  return h - h_given;
}

double transfer_entropy(std::span<const int> x, int x_card, std::span<const int> y, int y_card,
                        int lag) {
  check_aligned(x, y);
  SampleLog log;
  log.add_column("x", x_card, std::vector<int>(x.begin(), x.end()));
  log.add_column("y", y_card, std::vector<int>(y.begin(), y.end()));
  return transfer_entropy(log, "x", "y", lag);
}

double transfer_entropy(const SampleLog& log, const std::string& x, const std::string& y,
                        int lag) {
  const Column& xc = log.column(x);
  const Column& yc = log.column(y);
  const auto ends = log.window_ends(lag);
  if (ends.empty()) throw InsufficientData("series shorter than the lag");

  std::vector<int> target;
  std::vector<std::vector<int>> past(2 * static_cast<std::size_t>(lag));
  for (std::size_t t : ends) {
    target.push_back(yc.values[t]);
    for (int k = 1; k <= lag; ++k) {
      past[static_cast<std::size_t>(k - 1)].push_back(yc.values[t - static_cast<std::size_t>(k)]);
      past[static_cast<std::size_t>(lag + k - 1)].push_back(
          xc.values[t - static_cast<std::size_t>(k)]);
    }
  }
  std::vector<std::span<const int>> y_past(past.begin(), past.begin() + lag);
  std::vector<std::span<const int>> both(past.begin(), past.end());
  std::vector<int> y_cards(static_cast<std::size_t>(lag), yc.cardinality);
  std::vector<int> cards = y_cards;
  cards.insert(cards.end(), static_cast<std::size_t>(lag), xc.cardinality);

  const Counts full = count(target, both, cards);
  const double coverage = full.n / static_cast<double>(full.given.size());
  if (coverage < kMinCoverage) {
    throw InsufficientData("average of " + std::to_string(coverage) +
                           " samples per conditioning configuration");
  }
  return entropy_from(count(target, y_past, y_cards)) - entropy_from(full);
}

double normalized_transfer_entropy(const SampleLog& log, const std::vector<std::string>& actions,
                                   const std::string& obs,
                                   const std::vector<std::string>& conditioning) {
  const auto ends = log.window_ends(1);
  if (ends.empty()) throw InsufficientData("no transitions in the log");
  const double base = slice_entropy(log, ends, obs, {obs});
  if (base <= 1e-12) throw ZeroBaseEntropy(obs + " is already determined by its own past");
  std::vector<std::string> given = {obs};
  given.insert(given.end(), actions.begin(), actions.end());
  given.insert(given.end(), conditioning.begin(), conditioning.end());
  const double reduced = slice_entropy(log, ends, obs, given);
  return std::clamp((base - reduced) / base, 0.0, 1.0);
}

Selection forward_select(const SampleLog& log, const std::string& target,
                         std::vector<std::string> candidates, double threshold,
                         const std::vector<std::string>& base) {
  const auto ends = log.window_ends(1);
  if (ends.empty()) throw InsufficientData("no transitions in the log");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::erase_if(candidates, [&](const std::string& c) {
    return std::find(base.begin(), base.end(), c) != base.end();
  });

  Selection out;
  std::vector<std::string> given = base;
  const double h0 = slice_entropy(log, ends, target, given);
  out.base_entropy = h0;
  out.residual_entropy = h0;
  if (h0 <= 1e-12) return out;

  // The target's own past is tested first; once accepted it joins the base
  // and the remaining gains are fractions of H(target_{t+1} | target_t).
  const auto self = std::find(candidates.begin(), candidates.end(), target);
  if (self != candidates.end()) {
    given.push_back(target);
    const double h = slice_entropy(log, ends, target, given);
    const double gain = (h0 - h) / h0;
    if (gain >= threshold) {
      out.parents.push_back(EdgeCandidate{target, target, gain, EdgeKind::inter});
      candidates.erase(self);
      out.base_entropy = h;
      out.residual_entropy = h;
      if (h <= 1e-12) return out;
    } else {
      given.pop_back();
    }
  }

  while (!candidates.empty()) {
    double best_gain = -1.0;
    std::size_t best = 0;
    double best_h = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      given.push_back(candidates[i]);
      const double h = slice_entropy(log, ends, target, given);
      given.pop_back();
      const double gain = (out.residual_entropy - h) / out.base_entropy;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
        best_h = h;
      }
    }
    if (best_gain < threshold) break;
    out.parents.push_back(EdgeCandidate{candidates[best], target, best_gain, EdgeKind::inter});
    given.push_back(candidates[best]);
    out.residual_entropy = best_h;
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

SampleLog sample_random_policy(const env::WorldConfig& world, std::size_t steps,
                               std::size_t episode_length, std::uint64_t seed) {
  world.validate();
  if (episode_length == 0) throw ConfigInvalid("episode_length must be positive");
  const CounterRng root = CounterRng(seed).substream(kSamplingStreamTag);
  std::vector<std::vector<int>> cols(6);
  std::vector<std::size_t> starts;

  env::WorldState state = env::WorldState::initial(world);
  DiscreteObservation obs = env::discretize(env::observe(state), world);
  std::size_t episode = 0;
  std::size_t in_episode = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    if (in_episode == episode_length) {
      state = env::WorldState::initial(world);
      obs = env::discretize(env::observe(state), world);
      starts.push_back(t);
      ++episode;
      in_episode = 0;
    }
    const CounterRng step_rng = root.substream(episode).substream(in_episode);
    CounterRng choice = step_rng.substream(2);
    const auto a = static_cast<int>(choice.next_u64() % vars::kActionCount);
    const DiscreteAction act{a / vars::kStepAsideCategories, a % vars::kStepAsideCategories};

    const auto o = to_array(obs);
    for (std::size_t v = 0; v < 4; ++v) cols[v].push_back(o[v]);
    cols[4].push_back(act.step_forward);
    cols[5].push_back(act.step_aside);

    const env::StepResult r = env::env_step(state, act, step_rng);
    state = r.state;
    obs = env::discretize(r.observation, world);
    ++in_episode;
  }

  SampleLog log;
  const auto& obs_names = observation_columns();
  for (std::size_t v = 0; v < 4; ++v) {
    log.add_column(obs_names[v], vars::kObservationCards[v], std::move(cols[v]));
  }
  log.add_column("SF", vars::kStepForwardCategories, std::move(cols[4]));
  log.add_column("SA", vars::kStepAsideCategories, std::move(cols[5]));
  for (std::size_t s : starts) log.start_segment(s);
  return log;
}

DiscoveryReport discover(const SampleLog& log, double threshold) {
  DiscoveryReport report;
  const auto& obs = observation_columns();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Column& xi = log.column(obs[i]);
    const Distribution pi = empirical_distribution(xi.values, xi.cardinality);
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      const Column& xj = log.column(obs[j]);
      const double c = causal_coefficient(pi, empirical_distribution(xj.values, xj.cardinality));
      if (std::abs(c) <= threshold) continue;
      if (c > 0) {
        report.intra.push_back(EdgeCandidate{obs[i], obs[j], c, EdgeKind::intra});
      } else {
        report.intra.push_back(EdgeCandidate{obs[j], obs[i], -c, EdgeKind::intra});
      }
    }
  }
  std::vector<std::string> candidates = obs;
  candidates.insert(candidates.end(), action_columns().begin(), action_columns().end());
  for (const auto& target : obs) {
    const Selection s = forward_select(log, target, candidates, threshold);
    report.inter.insert(report.inter.end(), s.parents.begin(), s.parents.end());
  }
  // Action effects are measured across one step: C_D(O_{t+1}) with D at t.
  const auto ends = log.window_ends(1);
  for (const auto& target : obs) {
    const Column& oc = log.column(target);
    for (const auto& action : action_columns()) {
      const Column& dc = log.column(action);
      std::vector<int> o_next;
      std::vector<int> d_now;
      for (std::size_t t : ends) {
        o_next.push_back(oc.values[t]);
        d_now.push_back(dc.values[t - 1]);
      }
      const double c = causal_action_coefficient(o_next, oc.cardinality, d_now, dc.cardinality);
      if (c > threshold) report.action.push_back(EdgeCandidate{action, target, c, EdgeKind::inter});
    }
  }
  return report;
}

}  // namespace detour::discovery
