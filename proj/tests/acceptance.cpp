// Acceptance checks: one PASS/FAIL line per criterion. Exit status is
// non-zero when any criterion fails, except those listed with
// --expect-fail N (known failures are still printed as FAIL).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detour/agent.hpp"
#include "detour/discovery.hpp"
#include "detour/environment.hpp"
#include "detour/harness.hpp"
#include "detour/inference.hpp"
#include "detour/initial_network.hpp"
#include "detour/network.hpp"
#include "detour/rng.hpp"
#include "detour/surprise.hpp"
#include "oracles.hpp"

using namespace detour;

namespace {

constexpr int kSeeds = 20;
constexpr std::uint64_t kEvalSeedOffset = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Strict decrease with a margin well above floating-point noise, so that
// identical behaviour summed in a different order does not count.
bool decreased(double pre, double post) { return post < pre - 1e-9 * std::max(1.0, std::abs(pre)); }

// ---- shared learning batch --------------------------------------------------

struct Batch {
  std::vector<agent::LearningResult> barrier;
  std::vector<agent::LearningResult> open;
};

const Batch& learning_batch() {
  static const Batch batch = [] {
    Batch b;
    const agent::AgentConfig cfg;
    env::WorldConfig world;
    for (int s = 1; s <= kSeeds; ++s) {
      b.barrier.push_back(agent::run_learning_process(world, cfg, static_cast<std::uint64_t>(s)));
    }
    world.barrier_exists = false;
    for (int s = 1; s <= kSeeds; ++s) {
      b.open.push_back(agent::run_learning_process(world, cfg, static_cast<std::uint64_t>(s)));
    }
    return b;
  }();
  return batch;
}

// ---- 1 ----------------------------------------------------------------------

Outcome cpt_validity() {
  const auto net = network::build_initial_network();
  double worst = 0.0;
  for (std::size_t v = 0; v < 4; ++v) {
    const auto& t = net.observation_cpt(v);
    for (std::size_t c = 0; c < t.config_count(); ++c) {
      double s = 0.0;
      for (double x : t.column(c)) s += x;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  double worst_f = 0.0;
  for (int sf = 0; sf < 5; ++sf) {
    for (int sa = 0; sa < 11; ++sa) {
      for (int k = 0; k <= 100; ++k) {
        const auto f = network::heading_terms(sf, sa, k / 100.0);
        for (double s : {f.f1 + f.f1_plus + f.f1_minus, f.f1 + f.f2_plus + f.f2_minus,
                         f.f1 + f.f3_plus + f.f3_minus, f.f1 + f.f4_plus + f.f4_minus}) {
          worst_f = std::max(worst_f, std::abs(s - 1.0));
        }
      }
    }
  }
  return {worst <= 1e-9 && worst_f <= 1e-12,
          fmt("max column-sum error %.2e over 55 actions, max F-identity error %.2e", worst, worst_f)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome surprise_theory() {
  bool self_zero = true;
  CounterRng rng(2024);
  auto simplex = [&](std::size_t k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& x : p) {
      x = -std::log(1.0 - rng.uniform()) + 1e-3;
      s += x;
    }
    for (auto& x : p) x /= s;
    return Distribution::from_probs(p);
  };
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + static_cast<std::size_t>(i % 7);
    const auto q = simplex(k);
    const auto p = simplex(k);
    self_zero = self_zero && surprise::surprise_divergence(p, p) == 0.0;
    const double lhs = surprise::surprise_divergence(q, p);
    const double rhs = (surprise::kl_divergence(q, p) + surprise::entropy(q) - surprise::entropy(p)) /
                       std::sqrt(surprise::information_dispersion(p));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  const std::vector<Distribution> refs = {Distribution::from_probs({0.7, 0.2, 0.1}),
                                          Distribution::from_probs({0.5, 0.3, 0.15, 0.05}),
                                          Distribution::from_probs({0.9, 0.1})};
  bool normal = true;
  bool rate_ok = true;
  std::string ks;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto r = surprise::normality_mc_check(refs[i], 10000, 500, 100 + i);
    const double rate = surprise::h0_rejection_rate(refs[i], 10000, 2000, 0.05, 200 + i);
    normal = normal && r.p_value > 0.01;
    rate_ok = rate_ok && std::abs(rate - 0.05) <= 0.02;
    ks += fmt(" [KS p %.3f, H0 rejections %.3f]", r.p_value, rate);
  }
  return {self_zero && worst <= 1e-9 && normal && rate_ok,
          fmt("D_S(P||P)=0 %s, identity error %.2e,", self_zero ? "yes" : "no", worst) + ks};
}

// ---- 3 ----------------------------------------------------------------------

Outcome influence() {
  const bool half = surprise::influence_probability(0.0) == 0.5;
  bool monotone = true;
  double worst = 0.0;
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = -20.0 + 40.0 * i / 1000.0;
    const double p = surprise::influence_probability(x);
    monotone = monotone && p >= prev;
    prev = p;
    worst = std::max(worst, std::abs(surprise::influence_probability(-x) - (1.0 - p)));
  }
  const bool limits = surprise::influence_probability(-40.0) < 1e-12 &&
                      surprise::influence_probability(40.0) > 1.0 - 1e-12 &&
                      surprise::influence_probability(-kInfinity) == 0.0 &&
                      surprise::influence_probability(kInfinity) == 1.0;
  return {half && monotone && limits && worst <= 1e-12,
          fmt("P(0)=%.17g, monotone %s, limits %s, antisymmetry error %.2e",
              surprise::influence_probability(0.0), monotone ? "yes" : "no", limits ? "yes" : "no", worst)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome inference_oracle() {
  const auto net = network::build_initial_network();
  double joint_err = 0.0;
  double eu_err = 0.0;
  double udist_err = 0.0;
  for (std::size_t j = 0; j < vars::kJointObservationCount; ++j) {
    const auto o = observation_at(j);
    const auto cur = to_array(o);
    for (std::size_t k = 0; k < vars::kActionCount; ++k) {
      const auto a = action_at(k);
      const auto d = inference::predict_joint(net, o, a);
      std::vector<std::pair<double, double>> atoms;
      for (std::size_t n = 0; n < vars::kJointObservationCount; ++n) {
        const auto next = oracle::joint_state(n);
        const double p = oracle::joint_oracle(cur, next, a.step_forward, a.step_aside);
        joint_err = std::max(joint_err, std::abs(d[n] - p));
        if (p == 0.0) continue;
        const double u = oracle::utility_oracle(next[0], next[1], next[2], next[3], a.step_forward,
                                                a.step_aside);
        auto it = std::find_if(atoms.begin(), atoms.end(),
                               [&](const auto& at) { return std::abs(at.first - u) <= 1e-9; });
        if (it == atoms.end()) {
          atoms.emplace_back(u, p);
        } else {
          it->second += p;
        }
      }
      eu_err = std::max(eu_err, std::abs(inference::expected_utility(net, o, a) -
                                         oracle::expected_utility_oracle(cur, a.step_forward, a.step_aside)));
      const auto ud = inference::utility_distribution(net, o, a);
      if (ud.values.size() != atoms.size()) udist_err = std::max(udist_err, 1.0);
      for (const auto& [u, p] : atoms) {
        const auto idx = ud.find(u);
        udist_err = std::max(udist_err, idx ? std::abs(ud.probs[*idx] - p) : 1.0);
      }
    }
  }
  return {joint_err <= 1e-9 && eu_err <= 1e-9 && udist_err <= 1e-9,
          fmt("12100 pairs: joint %.2e, expected utility %.2e, utility distribution %.2e", joint_err,
              eu_err, udist_err)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome environment_soundness() {
  const env::WorldConfig world;
  const oracle::Geometry g;
  int escapes = 0;
  int overlaps = 0;
  CounterRng root(55);
  auto state = env::WorldState::initial(world);
  for (int t = 0; t < 100000; ++t) {
    if (t % 20 == 0) state = env::WorldState::initial(world);
    const CounterRng step = root.substream(static_cast<std::uint64_t>(t));
    const DiscreteAction a{static_cast<int>(step.substream(2).next_u64() % 5),
                           static_cast<int>(step.substream(3).next_u64() % 11)};
    state = env::env_step(state, a, step).state;
    const auto p = state.agent_position;
    escapes += !oracle::inside_bounds(g, p.x, p.y);
    overlaps += oracle::overlaps_barrier(g, p.x, p.y);
  }

  // Clipping against the bisection oracle from random clear positions.
  double worst = 0.0;
  int clipped = 0;
  CounterRng rng(56);
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.uniform() * 10.0;
    const double y = rng.uniform() * 15.0;
    if (oracle::overlaps_barrier(g, x, y)) continue;
    auto s = env::WorldState::initial(world);
    s.agent_position = {x, y};
    const bool forward = i % 2 == 0;
    const double mag = forward ? rng.uniform() * 2.5 : rng.uniform() * 5.0 - 2.5;
    const auto cand = forward ? env::step_forward(s, mag) : env::step_aside(s, mag);
    const auto out = env::apply_restrictors(
        s, cand, forward ? env::ActionKind::step_forward : env::ActionKind::step_aside);
    const double len = std::hypot(cand.x - x, cand.y - y);
    if (len == 0.0) continue;
    const double dx = (cand.x - x) / len;
    const double dy = (cand.y - y) / len;
    const double clear = oracle::clear_distance(g, x, y, dx, dy, len);
    if (!oracle::inside_bounds(g, x + clear * dx, y + clear * dy)) {
      if (!(out == s.agent_position)) worst = std::max(worst, 1.0);
      continue;
    }
    if (clear < len) ++clipped;
    worst = std::max(worst, std::abs(std::hypot(out.x - x, out.y - y) - clear));
  }
  return {escapes == 0 && overlaps == 0 && worst <= 1e-6,
          fmt("1e5 steps: %d out of bounds, %d barrier overlaps; clipping error %.2e over %d clipped moves",
              escapes, overlaps, worst, clipped)};
}

// ---- 6 ----------------------------------------------------------------------

Outcome detection() {
  const auto& b = learning_batch();
  int exact = 0;
  int with_tvf = 0;
  std::map<std::string, int> sets;
  for (const auto& r : b.barrier) {
    std::string key;
    for (const auto& v : r.selected_variables) key += (key.empty() ? "" : ",") + v;
    ++sets[key.empty() ? "none" : key];
    exact += r.selected_variables == std::vector<std::string>{"D", "BT"};
    with_tvf += std::count(r.selected_variables.begin(), r.selected_variables.end(), "TVF") > 0;
  }
  int open_detections = 0;
  for (const auto& r : b.open) {
    for (const auto& e : r.epochs) open_detections += e.summary.detected;
  }
  std::string spread;
  for (const auto& [k, n] : sets) spread += fmt(" {%s}:%d", k.c_str(), n);
  return {exact >= 16 && with_tvf == 0 && open_detections == 0,
          fmt("{D,BT} in %d/20, TVF in %d; no-barrier detections %d;", exact, with_tvf, open_detections) +
              spread};
}

// ---- 7 ----------------------------------------------------------------------

Outcome em_properties() {
  const auto& b = learning_batch();
  const auto base = network::build_initial_network();
  std::set<std::vector<std::string>> specs;
  for (const auto& r : b.barrier) {
    if (r.insertion_epoch) specs.insert(r.selected_variables);
  }
  double neutrality = 0.0;
  for (const auto& sel : specs) {
    const auto net = agent::insert_hidden_variable(base, agent::xm_spec(sel));
    for (std::size_t j = 0; j < vars::kJointObservationCount; ++j) {
      for (std::size_t k = 0; k < vars::kActionCount; ++k) {
        const auto p = inference::joint_probabilities(base, observation_at(j), action_at(k));
        const auto q = inference::joint_probabilities(net, observation_at(j), action_at(k));
        for (std::size_t i = 0; i < p.size(); ++i) neutrality = std::max(neutrality, std::abs(p[i] - q[i]));
      }
    }
  }

  int msteps = 0;
  int loglik_drops = 0;
  int objective_drops = 0;
  int calls = 0;
  int unconverged = 0;
  int unvisited = 0;
  int unvisited_off = 0;
  int runs = 0;
  for (const auto& r : b.barrier) {
    if (!r.insertion_epoch) continue;
    ++runs;
    for (const auto& log : r.em_logs) {
      ++calls;
      if (log.empty() || log.size() > 50 || log.back().max_delta > 1e-3) ++unconverged;
      for (const auto& it : log) {
        ++msteps;
        const double tol = 1e-9 * std::max(1.0, std::abs(it.loglik_before));
        loglik_drops += it.loglik_after < it.loglik_before - tol;
        objective_drops += it.objective_after < it.objective_before - tol;
      }
    }
    // The final HV table comes from the last epoch's records.
    const auto& net = r.final_network;
    std::set<std::size_t> seen;
    for (const auto& rec : r.epochs.back().summary.records) seen.insert(net.hidden_config(rec.obs_t));
    const auto& h = net.hidden_cpt();
    for (std::size_t c = 0; c < h.config_count(); ++c) {
      if (seen.count(c)) continue;
      ++unvisited;
      unvisited_off += !(h.probability(c, 0) == 0.5 && h.probability(c, 1) == 0.5);
    }
  }
  return {neutrality <= 1e-12 && loglik_drops == 0 && objective_drops == 0 && unvisited_off == 0 &&
              unvisited > 0 && unconverged == 0 && runs > 0,
          fmt("neutrality %.2e; %d M-steps, log-likelihood drops %d, penalised drops %d; "
              "%d unvisited HV configurations, %d not at 0.500/0.500; %d EM calls, %d unconverged",
              neutrality, msteps, loglik_drops, objective_drops, unvisited, unvisited_off, calls,
              unconverged)};
}

// ---- 8 ----------------------------------------------------------------------

double bt_given(const network::TwoSliceNetwork& net, int bt, int hv) {
  const auto& t = net.cpt("BT");
  double s = 0.0;
  for (int sf = 0; sf < 5; ++sf) {
    for (int sa = 0; sa < 11; ++sa) {
      const std::vector<int> cfg = {bt, sf, sa, hv};
      s += t.probability(t.config_index(cfg), 1);
    }
  }
  return s / 55.0;
}

double hv_given(const network::TwoSliceNetwork& net, int bt, int d) {
  DiscreteObservation o{d, 5, bt, 0};
  return net.hidden_cpt().probability(net.hidden_config(o), 1);
}

Outcome learned_direction() {
  const auto& b = learning_batch();
  int ok = 0;
  for (const auto& r : b.barrier) {
    const auto& net = r.final_network;
    if (!net.has_hidden()) continue;
    const auto& hp = net.hidden_cpt().parents();
    const auto& bp = net.cpt("BT").parents();
    if (std::find(hp.begin(), hp.end(), "BT") == hp.end() || std::find(hp.begin(), hp.end(), "D") == hp.end() ||
        std::find(bp.begin(), bp.end(), "HV") == bp.end()) {
      continue;
    }
    ok += bt_given(net, 1, 1) > bt_given(net, 1, 0) && hv_given(net, 1, 1) > hv_given(net, 0, 0);
  }
  return {ok >= 16, fmt("both inequalities hold in %d/20 runs", ok)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome behaviour() {
  const auto& b = learning_batch();
  int bt = 0;
  int cs_bt = 0;
  int cs_d = 0;
  int cs_u = 0;
  int reach = 0;
  double pre_bt = 0.0;
  double post_bt = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    harness::ExperimentConfig c;
    c.seed = static_cast<std::uint64_t>(s + 1) + kEvalSeedOffset;
    const auto pre = harness::cmd_run(c, b.barrier[static_cast<std::size_t>(s)].initial);
    const auto post = harness::cmd_run(c, b.barrier[static_cast<std::size_t>(s)].final_network);
    const auto cmp = harness::cmd_eval(pre, post);
    bt += decreased(cmp.pre.barrier_events_per_epoch, cmp.post.barrier_events_per_epoch);
    cs_bt += decreased(cmp.pre.mean_cs_bt, cmp.post.mean_cs_bt);
    cs_d += decreased(cmp.pre.mean_cs_depth, cmp.post.mean_cs_depth);
    cs_u += decreased(cmp.pre.mean_cs_utility, cmp.post.mean_cs_utility);
    reach += cmp.post.success_rate >= cmp.pre.success_rate;
    pre_bt += cmp.pre.barrier_events_per_epoch / kSeeds;
    post_bt += cmp.post.barrier_events_per_epoch / kSeeds;
  }
  return {bt >= 16 && cs_bt >= 16 && cs_d >= 16 && cs_u >= 16 && reach >= 16,
          fmt("seeds passing: BT events %d, C_BT %d, C_D %d, |C_U| %d, reach rate %d (of 20); "
              "mean BT events %.2f -> %.2f",
              bt, cs_bt, cs_d, cs_u, reach, pre_bt, post_bt)};
}

// ---- 10 ---------------------------------------------------------------------

Outcome discovery_sanity() {
  CounterRng rng(10);
  const std::size_t n = 10000;
  std::vector<int> x(n);
  std::vector<int> z(n);
  for (auto& v : x) v = static_cast<int>(rng.next_u64() % 4);
  for (auto& v : z) v = static_cast<int>(rng.next_u64() % 4);
  std::vector<int> y(n, 0);
  for (std::size_t t = 1; t < n; ++t) y[t] = x[t - 1];
  const double hx = surprise::entropy(discovery::empirical_distribution(x, 4));
  const double copy = discovery::transfer_entropy(x, 4, y, 4);
  const double indep = discovery::transfer_entropy(x, 4, z, 4);

  int full = 0;
  const harness::DiscoveryConfig dc;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto log = discovery::sample_random_policy(env::WorldConfig{}, static_cast<std::size_t>(dc.steps),
                                                     static_cast<std::size_t>(dc.episode_length), s);
    const auto report = discovery::discover(log, dc.threshold);
    int self = 0;
    for (const auto& v : discovery::observation_columns()) {
      self += std::any_of(report.inter.begin(), report.inter.end(),
                          [&](const auto& e) { return e.source == v && e.target == v; });
    }
    full += self == 4;
  }
  return {std::abs(copy - hx) <= 0.05 && std::abs(indep) <= 0.02 && full >= 8,
          fmt("copy chain %.4f vs H(X) %.4f, independent %.4f; all self-edges in %d/10 seeds", copy, hx,
              indep, full)};
}

// ---- 11 ---------------------------------------------------------------------

Outcome determinism() {
  harness::ExperimentConfig c;
  c.agent.epoch_budget = 5;
  std::vector<harness::Bundle> bundles;
  bundles.push_back(harness::cmd_run(c));
  c.seed = 2;
  bundles.push_back(harness::cmd_run(c));
  const auto learned = harness::cmd_learn(c);
  bundles.push_back(learned);
  bundles.push_back(harness::cmd_run(
      c, network::network_from_json(nlohmann::json::parse(learned.file("network_post.json")))));
  bundles.push_back(harness::cmd_discover(c));
  int same = 0;
  std::string why;
  for (const auto& b : bundles) {
    try {
      harness::cmd_replay(b);
      ++same;
    } catch (const std::exception& e) {
      why += std::string(" ") + e.what();
    }
  }
  return {same == 5, fmt("%d/5 bundles replayed byte for byte", same) + why};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) != "--expect-fail") {
      std::fprintf(stderr, "usage: acceptance [--expect-fail N]...\n");
      return 2;
    }
    expected_failures.insert(std::atoi(argv[i + 1]));
  }
  if (argc % 2 == 0) {
    std::fprintf(stderr, "usage: acceptance [--expect-fail N]...\n");
    return 2;
  }
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "CPT validity", 1, cpt_validity},
      {2, "surprise theory", 60, surprise_theory},
      {3, "influence probability", 1, influence},
      {4, "inference correctness", 30, inference_oracle},
      {5, "environment soundness", 30, environment_soundness},
      {6, "detection", 300, detection},
      {7, "EM properties", 120, em_properties},
      {8, "learned-model direction", 300, learned_direction},
      {9, "behavioural outcome", 600, behaviour},
      {10, "causal-discovery sanity", 120, discovery_sanity},
      {11, "determinism", 120, determinism},
  };
  int failed = 0;
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    const bool known = expected_failures.count(c.id) > 0;
    failed += !pass;
    unexpected += !pass && !known;
    std::printf("criterion %2d %s: %s (%s; %.2f s of %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_s,
                known ? (pass ? " [listed as known failure, now passing]" : " [known failure]") : "");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return unexpected == 0 ? 0 : 1;
}
