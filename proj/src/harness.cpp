#include "detour/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "detour/errors.hpp"
#include "detour/format.hpp"
#include "detour/initial_network.hpp"

namespace detour::harness {
namespace {

using nlohmann::json;

// JSON has no infinities; those are written as the strings "inf"/"-inf".
json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- config -----------------------------------------------------------------

json point_json(env::Point p) { return json::array({p.x, p.y}); }

env::Point point_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigInvalid(key + " must be a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigInvalid(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw ConfigInvalid("unknown key " + where + "." + key);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
  else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
  else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
  else ok = v.is_string();
  if (!ok) throw ConfigInvalid(where + "." + key + " has the wrong type");
  try {
    out = v.get<T>();
  } catch (const json::exception&) {
    throw ConfigInvalid(where + "." + key + " is out of range");
  }
}

const char* to_string(agent::PriorReference r) {
  return r == agent::PriorReference::previous ? "previous" : "uniform";
}
const char* to_string(agent::Imputation i) {
  return i == agent::Imputation::hard ? "hard" : "sampled";
}

// ---- traces -----------------------------------------------------------------

const std::array<const char*, 4> kVarTags = {"d", "ha", "bt", "tvf"};

std::string steps_header() {
  std::string h = "epoch,t,d,ha,bt,tvf,sf,sa,d_next,ha_next,bt_next,tvf_next,meu,utility,c_u,p0,weight";
  for (const char* v : kVarTags) {
    h += std::string(",cs_") + v + ",p_" + v + ",rej_" + v;
  }
  for (const char* v : kVarTags) h += std::string(",ns_") + v;
  return h + "\n";
}

// Shares of the step's total observation surprise. Infinite coefficients
// split the whole share between them; an all-zero step gives zeros.
std::array<double, 4> normalized_surprises(const agent::StepRecord& r) {
  std::array<double, 4> out{};
  int infinite = 0;
  double sum = 0.0;
  for (const auto& v : r.per_variable) {
    if (std::isinf(v.coefficient)) ++infinite;
    else sum += v.coefficient;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = r.per_variable[i].coefficient;
    if (infinite > 0) out[i] = std::isinf(c) ? 1.0 / infinite : 0.0;
    else if (sum > 0.0) out[i] = c / sum;
  }
  return out;
}

void write_step(std::ostream& out, const agent::StepRecord& r) {
  const auto o = to_array(r.obs_t);
  const auto n = to_array(r.obs_t1);
  out << r.epoch << ',' << r.t;
  for (int v : o) out << ',' << v;
  out << ',' << r.action.step_forward << ',' << r.action.step_aside;
  for (int v : n) out << ',' << v;
  out << ',' << format_double(r.meu) << ',' << format_double(r.realized_utility) << ','
      << format_double(r.c_u) << ',' << format_double(r.influence_p0) << ','
      << format_double(r.weight);
  for (const auto& v : r.per_variable) {
    out << ',' << format_double(v.coefficient) << ',' << format_double(v.p_value) << ','
        << (v.rejected ? 1 : 0);
  }
  for (double s : normalized_surprises(r)) out << ',' << format_double(s);
  out << '\n';
}

std::string trajectory_csv(const std::vector<agent::EpochResult>& epochs) {
  std::ostringstream out;
  std::ostringstream header;
  env::write_trajectory_header(header);
  out << "epoch," << header.str();
  for (const auto& e : epochs) {
    for (const auto& row : e.trajectory) {
      out << e.summary.epoch << ',';
      env::write_trajectory_row(out, row);
    }
  }
  return out.str();
}

std::string steps_csv(const std::vector<agent::EpochResult>& epochs) {
  std::ostringstream out;
  out << steps_header();
  for (const auto& e : epochs) {
    for (const auto& r : e.summary.records) write_step(out, r);
  }
  return out.str();
}

json epoch_json(const agent::EpochSummary& s) {
  json counts = json::object();
  for (std::size_t v = 0; v < 4; ++v) {
    counts[std::string(vars::kObservationNames[v])] = s.rejection_counts[v];
  }
  return {{"epoch", s.epoch},
          {"steps", s.records.size()},
          {"detected", s.detected},
          {"selected_variables", s.selected_variables},
          {"rejection_counts", counts},
          {"reached_target", s.reached_target},
          {"barrier_events", s.barrier_events}};
}

json epochs_json(const std::vector<agent::EpochResult>& epochs) {
  json list = json::array();
  for (const auto& e : epochs) list.push_back(epoch_json(e.summary));
  return {{"schema", kEpochsSchema}, {"epochs", list}};
}

json em_log_json(const std::vector<agent::EmIteration>& log) {
  json out = json::array();
  for (const auto& it : log) {
    out.push_back({{"iteration", it.iteration},
                   {"max_delta", number(it.max_delta)},
                   {"hv_ones", it.hv_ones},
                   {"weighted_hv_ones", number(it.weighted_hv_ones)},
                   {"loglik_before", number(it.loglik_before)},
                   {"loglik_after", number(it.loglik_after)},
                   {"objective_before", number(it.objective_before)},
                   {"objective_after", number(it.objective_after)}});
  }
  return out;
}

// Adds manifest.json describing every other file of the bundle.
void seal(Bundle& b, const std::string& command, json extra) {
  json files = json::object();
  for (const auto& [name, bytes] : b.files) {
    files[name] = {{"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a(bytes))}};
  }
  json m = {{"schema", kManifestSchema},
            {"command", command},
            {"code_version", kCodeVersion},
            {"files", files}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  b.files["manifest.json"] = dump(m);
}

// The output directory does not influence any result and is left out so
// that bundles written to different places stay comparable.
json config_section(const ExperimentConfig& c) {
  ExperimentConfig recorded = c;
  recorded.output_dir.clear();
  return {{"seed", c.seed}, {"config", to_json(recorded)}};
}

// ---- eval -------------------------------------------------------------------

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw BundleMismatch("missing CSV column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw BundleMismatch("empty CSV");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw BundleMismatch("ragged CSV row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

double to_double(const std::string& s) {
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw BundleMismatch("bad number " + s);
    return v;
  } catch (const std::logic_error&) {
    throw BundleMismatch("bad number " + s);
  }
}

double capped(double v) { return std::min(std::abs(v), kSurpriseCap); }

// Mean of a per-step column grouped by step index.
std::map<int, double> curve(const Table& steps, const std::string& column) {
  std::map<int, std::pair<double, int>> acc;
  const std::size_t tc = steps.col("t");
  const std::size_t vc = steps.col(column);
  for (const auto& row : steps.rows) {
    auto& [sum, n] = acc[std::stoi(row[tc])];
    sum += capped(to_double(row[vc]));
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [t, sn] : acc) out[t] = sn.first / sn.second;
  return out;
}

}  // namespace

// ---- config -----------------------------------------------------------------

void ExperimentConfig::validate() const {
  world.validate();
  agent.validate();
  if (!(discovery.threshold >= 0.0 && discovery.threshold <= 1.0)) {
    throw ConfigInvalid("discovery.threshold must lie in [0, 1]");
  }
  if (discovery.lag < 1) throw ConfigInvalid("discovery.lag must be at least 1");
  if (discovery.steps < 0) throw ConfigInvalid("discovery.steps must be non-negative");
  if (discovery.episode_length < 1) throw ConfigInvalid("discovery.episode_length must be positive");
  if (run_epochs < 1) throw ConfigInvalid("run_epochs must be positive");
}

json to_json(const ExperimentConfig& c) {
  const auto& w = c.world;
  const auto& a = c.agent;
  return {
      {"schema", kConfigSchema},
      {"seed", c.seed},
      {"run_epochs", c.run_epochs},
      {"output_dir", c.output_dir},
      {"world",
       {{"x_min", w.x_min},
        {"x_max", w.x_max},
        {"y_min", w.y_min},
        {"y_max", w.y_max},
        {"target", point_json(w.target)},
        {"agent_start", point_json(w.agent_start)},
        {"agent_orientation", w.agent_orientation},
        {"agent_width", w.agent_width},
        {"barrier_exists", w.barrier_exists},
        {"barrier_start", point_json(w.barrier_start)},
        {"barrier_end", point_json(w.barrier_end)},
        {"spike_separation", w.spike_separation},
        {"spike_length", w.spike_length},
        {"tactile_range", w.tactile_range},
        {"visual_range", w.visual_range}}},
      {"agent",
       {{"alpha", a.alpha},
        {"epsilon", a.epsilon},
        {"max_iters", a.max_iters},
        {"epoch_budget", a.epoch_budget},
        {"steps_per_epoch", a.steps_per_epoch},
        {"min_rejections", a.min_rejections},
        {"map_prior_strength", a.map_prior_strength},
        {"prior_reference", to_string(a.prior_reference)},
        {"imputation", to_string(a.imputation)},
        {"heading_balance", a.heading_balance}}},
      {"discovery",
       {{"threshold", c.discovery.threshold},
        {"lag", c.discovery.lag},
        {"steps", c.discovery.steps},
        {"episode_length", c.discovery.episode_length}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, "config",
                 {"schema", "seed", "run_epochs", "output_dir", "world", "agent", "discovery"});
  if (j.contains("schema") && j.at("schema") != kConfigSchema) {
    throw ConfigInvalid("unsupported config schema " + j.at("schema").dump());
  }
  if (j.contains("seed") && !j.at("seed").is_number_unsigned()) {
    throw ConfigInvalid("seed must be a non-negative integer");
  }
  read(j, "seed", c.seed, "config");
  read(j, "run_epochs", c.run_epochs, "config");
  read(j, "output_dir", c.output_dir, "config");

  if (j.contains("world")) {
    const json& w = j.at("world");
    reject_unknown(w, "world",
                   {"x_min", "x_max", "y_min", "y_max", "target", "agent_start",
                    "agent_orientation", "agent_width", "barrier_exists", "barrier_start",
                    "barrier_end", "spike_separation", "spike_length", "tactile_range",
                    "visual_range"});
    auto& cw = c.world;
    read(w, "x_min", cw.x_min, "world");
    read(w, "x_max", cw.x_max, "world");
    read(w, "y_min", cw.y_min, "world");
    read(w, "y_max", cw.y_max, "world");
    if (w.contains("target")) cw.target = point_from(w.at("target"), "world.target");
    if (w.contains("agent_start")) cw.agent_start = point_from(w.at("agent_start"), "world.agent_start");
    read(w, "agent_orientation", cw.agent_orientation, "world");
    read(w, "agent_width", cw.agent_width, "world");
    read(w, "barrier_exists", cw.barrier_exists, "world");
    if (w.contains("barrier_start")) {
      cw.barrier_start = point_from(w.at("barrier_start"), "world.barrier_start");
    }
    if (w.contains("barrier_end")) cw.barrier_end = point_from(w.at("barrier_end"), "world.barrier_end");
    read(w, "spike_separation", cw.spike_separation, "world");
    read(w, "spike_length", cw.spike_length, "world");
    read(w, "tactile_range", cw.tactile_range, "world");
    read(w, "visual_range", cw.visual_range, "world");
  }

  if (j.contains("agent")) {
    const json& a = j.at("agent");
    reject_unknown(a, "agent",
                   {"alpha", "epsilon", "max_iters", "epoch_budget", "steps_per_epoch",
                    "min_rejections", "map_prior_strength", "prior_reference", "imputation",
                    "heading_balance"});
    auto& ca = c.agent;
    read(a, "alpha", ca.alpha, "agent");
    read(a, "epsilon", ca.epsilon, "agent");
    read(a, "max_iters", ca.max_iters, "agent");
    read(a, "epoch_budget", ca.epoch_budget, "agent");
    read(a, "steps_per_epoch", ca.steps_per_epoch, "agent");
    read(a, "min_rejections", ca.min_rejections, "agent");
    read(a, "map_prior_strength", ca.map_prior_strength, "agent");
    read(a, "heading_balance", ca.heading_balance, "agent");
    if (a.contains("prior_reference")) {
      const auto s = a.at("prior_reference");
      if (s == "previous") ca.prior_reference = agent::PriorReference::previous;
      else if (s == "uniform") ca.prior_reference = agent::PriorReference::uniform;
      else throw ConfigInvalid("agent.prior_reference must be \"previous\" or \"uniform\"");
    }
    if (a.contains("imputation")) {
      const auto s = a.at("imputation");
      if (s == "hard") ca.imputation = agent::Imputation::hard;
      else if (s == "sampled") ca.imputation = agent::Imputation::sampled;
      else throw ConfigInvalid("agent.imputation must be \"hard\" or \"sampled\"");
    }
  }

  if (j.contains("discovery")) {
    const json& d = j.at("discovery");
    reject_unknown(d, "discovery", {"threshold", "lag", "steps", "episode_length"});
    read(d, "threshold", c.discovery.threshold, "discovery");
    read(d, "lag", c.discovery.lag, "discovery");
    read(d, "steps", c.discovery.steps, "discovery");
    read(d, "episode_length", c.discovery.episode_length, "discovery");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- bundles ----------------------------------------------------------------

const std::string& Bundle::file(const std::string& name) const {
  const auto it = files.find(name);
  if (it == files.end()) throw BundleMismatch("bundle has no " + name);
  return it->second;
}

json Bundle::manifest() const {
  try {
    return json::parse(file("manifest.json"));
  } catch (const json::parse_error& e) {
    throw BundleMismatch(std::string("unreadable manifest: ") + e.what());
  }
}

void write_bundle(const Bundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, bytes] : bundle.files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot write " + (dir / name).string());
    out << bytes;
  }
}

Bundle read_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw BundleMismatch(dir.string() + " is not a directory");
  Bundle b;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    b.files[entry.path().filename().string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  b.file("manifest.json");
  return b;
}

// ---- commands ---------------------------------------------------------------

Bundle cmd_discover(const ExperimentConfig& config) {
  config.validate();
  const auto log = discovery::sample_random_policy(
      config.world, static_cast<std::size_t>(config.discovery.steps),
      static_cast<std::size_t>(config.discovery.episode_length), config.seed);
  const auto report = discovery::discover(log, config.discovery.threshold);

  Bundle b;
  {
    std::ostringstream out;
    out << "t,segment_start";
    for (const auto& c : log.columns()) out << ',' << c.name;
    out << '\n';
    const auto& starts = log.segment_starts();
    for (std::size_t t = 0; t < log.length(); ++t) {
      const bool start = t == 0 || std::binary_search(starts.begin(), starts.end(), t);
      out << t << ',' << (start ? 1 : 0);
      for (const auto& c : log.columns()) out << ',' << c.values[t];
      out << '\n';
    }
    b.files["samples.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "group,kind,source,target,coefficient\n";
    auto emit = [&](const char* group, const std::vector<discovery::EdgeCandidate>& edges) {
      for (const auto& e : edges) {
        out << group << ',' << discovery::to_string(e.kind) << ',' << e.source << ',' << e.target
            << ',' << format_double(e.coefficient) << '\n';
      }
    };
    emit("intra", report.intra);
    emit("parents", report.inter);
    emit("action", report.action);
    b.files["edges.csv"] = out.str();
  }
  {
    // Pairwise transfer entropy at the configured lag.
    std::ostringstream out;
    out << "source,target,transfer_entropy\n";
    std::vector<std::string> names = discovery::observation_columns();
    names.insert(names.end(), discovery::action_columns().begin(), discovery::action_columns().end());
    for (const auto& target : discovery::observation_columns()) {
      for (const auto& source : names) {
        double te = std::nan("");
        try {
          te = discovery::transfer_entropy(log, source, target, config.discovery.lag);
        } catch (const InsufficientData&) {
        }
        out << source << ',' << target << ',' << format_double(te) << '\n';
      }
    }
    b.files["transfer.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "target,normalized_transfer_entropy\n";
    for (const auto& target : discovery::observation_columns()) {
      double nte = std::nan("");
      try {
        nte = discovery::normalized_transfer_entropy(log, discovery::action_columns(), target);
      } catch (const ZeroBaseEntropy&) {
      }
      out << target << ',' << format_double(nte) << '\n';
    }
    b.files["explained.csv"] = out.str();
  }
  json extra = config_section(config);
  extra["schemas"] = {{"samples.csv", kSamplesSchema},
                      {"edges.csv", kEdgesSchema},
                      {"transfer.csv", kTransferSchema},
                      {"explained.csv", kTransferSchema}};
  seal(b, "discover", extra);
  return b;
}

Bundle cmd_learn(const ExperimentConfig& config) {
  config.validate();
  const auto result = agent::run_learning_process(config.world, config.agent, config.seed);
  Bundle b;
  b.files["trajectory.csv"] = trajectory_csv(result.epochs);
  b.files["steps.csv"] = steps_csv(result.epochs);
  json epochs = epochs_json(result.epochs);
  json em = json::array();
  for (const auto& log : result.em_logs) em.push_back(em_log_json(log));
  json deltas = json::array();
  for (double d : result.epoch_deltas) deltas.push_back(number(d));
  epochs["learning"] = {
      {"insertion_epoch", result.insertion_epoch ? json(*result.insertion_epoch) : json(nullptr)},
      {"selected_variables", result.selected_variables},
      {"converged", result.converged},
      {"epoch_deltas", deltas},
      {"em", em}};
  b.files["epochs.json"] = dump(epochs);
  b.files["network_pre.json"] = dump(network::to_json(result.initial));
  b.files["network_post.json"] = dump(network::to_json(result.final_network));
  json extra = config_section(config);
  extra["schemas"] = {{"trajectory.csv", kTrajectorySchema},
                      {"steps.csv", kStepsSchema},
                      {"epochs.json", kEpochsSchema},
                      {"network_pre.json", "detour.network/1"},
                      {"network_post.json", "detour.network/1"}};
  seal(b, "learn", extra);
  return b;
}

Bundle cmd_run(const ExperimentConfig& config, const std::optional<network::TwoSliceNetwork>& net) {
  config.validate();
  const network::TwoSliceNetwork used =
      net ? *net : network::build_initial_network(config.agent.heading_balance);
  const auto epochs =
      agent::run_fixed(used, config.world, config.agent, config.seed, config.run_epochs);
  Bundle b;
  b.files["network.json"] = dump(network::to_json(used));
  b.files["trajectory.csv"] = trajectory_csv(epochs);
  b.files["steps.csv"] = steps_csv(epochs);
  b.files["epochs.json"] = dump(epochs_json(epochs));
  json extra = config_section(config);
  extra["network_source"] = net ? "given" : "initial";
  extra["schemas"] = {{"network.json", "detour.network/1"},
                      {"trajectory.csv", kTrajectorySchema},
                      {"steps.csv", kStepsSchema},
                      {"epochs.json", kEpochsSchema}};
  seal(b, "run", extra);
  return b;
}

RunMetrics metrics_of(const Bundle& bundle) {
  RunMetrics m;
  json epochs;
  try {
    epochs = json::parse(bundle.file("epochs.json")).at("epochs");
  } catch (const json::exception& e) {
    throw BundleMismatch(std::string("unreadable epochs.json: ") + e.what());
  }
  m.epochs = static_cast<int>(epochs.size());
  if (m.epochs == 0) return m;
  int successes = 0;
  double steps_to_target = 0.0;
  double events = 0.0;
  for (const auto& e : epochs) {
    events += e.at("barrier_events").get<double>();
    if (e.at("reached_target").get<bool>()) {
      ++successes;
      steps_to_target += e.at("steps").get<double>();
    }
  }
  m.barrier_events_per_epoch = events / m.epochs;
  m.success_rate = static_cast<double>(successes) / m.epochs;
  m.mean_steps_to_target = successes > 0 ? steps_to_target / successes : 0.0;

  const Table steps = parse_csv(bundle.file("steps.csv"));
  if (!steps.rows.empty()) {
    const std::size_t bt = steps.col("cs_bt");
    const std::size_t d = steps.col("cs_d");
    const std::size_t u = steps.col("c_u");
    for (const auto& row : steps.rows) {
      m.mean_cs_bt += capped(to_double(row[bt]));
      m.mean_cs_depth += capped(to_double(row[d]));
      m.mean_cs_utility += capped(to_double(row[u]));
    }
    const auto n = static_cast<double>(steps.rows.size());
    m.mean_cs_bt /= n;
    m.mean_cs_depth /= n;
    m.mean_cs_utility /= n;
  }
  return m;
}

Comparison cmd_eval(const Bundle& pre, const Bundle& post) {
  const json mp = pre.manifest();
  const json mq = post.manifest();
  if (mp.value("command", "") != "run" || mq.value("command", "") != "run") {
    throw BundleMismatch("eval compares two run bundles");
  }
  if (mp.value("config", json()) != mq.value("config", json())) {
    throw BundleMismatch("bundles were produced with different configurations");
  }
  if (mp.value("seed", json()) != mq.value("seed", json())) {
    throw BundleMismatch("bundles were produced with different seeds");
  }

  Comparison c;
  c.pre = metrics_of(pre);
  c.post = metrics_of(post);
  {
    std::ostringstream out;
    out << "metric,pre,post,delta\n";
    auto row = [&](const char* name, double a, double b) {
      out << name << ',' << format_double(a) << ',' << format_double(b) << ','
          << format_double(b - a) << '\n';
    };
    row("epochs", c.pre.epochs, c.post.epochs);
    row("barrier_events_per_epoch", c.pre.barrier_events_per_epoch, c.post.barrier_events_per_epoch);
    row("mean_cs_bt", c.pre.mean_cs_bt, c.post.mean_cs_bt);
    row("mean_cs_depth", c.pre.mean_cs_depth, c.post.mean_cs_depth);
    row("mean_cs_utility", c.pre.mean_cs_utility, c.post.mean_cs_utility);
    row("success_rate", c.pre.success_rate, c.post.success_rate);
    row("mean_steps_to_target", c.pre.mean_steps_to_target, c.post.mean_steps_to_target);
    c.report.files["comparison.csv"] = out.str();
  }
  {
    const Table a = parse_csv(pre.file("steps.csv"));
    const Table b = parse_csv(post.file("steps.csv"));
    std::ostringstream out;
    out << "variable,t,pre,post\n";
    for (const auto& [label, column] :
         std::vector<std::pair<std::string, std::string>>{{"BT", "cs_bt"}, {"D", "cs_d"}, {"U", "c_u"}}) {
      const auto ca = curve(a, column);
      const auto cb = curve(b, column);
      std::set<int> ts;
      for (const auto& [t, _] : ca) ts.insert(t);
      for (const auto& [t, _] : cb) ts.insert(t);
      for (int t : ts) {
        const auto ia = ca.find(t);
        const auto ib = cb.find(t);
        out << label << ',' << t << ','
            << format_double(ia == ca.end() ? std::nan("") : ia->second) << ','
            << format_double(ib == cb.end() ? std::nan("") : ib->second) << '\n';
      }
    }
    c.report.files["curves.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "phase,epoch,step,x,y\n";
    for (const auto& [phase, bundle] :
         std::vector<std::pair<const char*, const Bundle*>>{{"pre", &pre}, {"post", &post}}) {
      const Table t = parse_csv(bundle->file("trajectory.csv"));
      const std::size_t e = t.col("epoch");
      const std::size_t s = t.col("step");
      const std::size_t x = t.col("x");
      const std::size_t y = t.col("y");
      for (const auto& row : t.rows) {
        out << phase << ',' << row[e] << ',' << row[s] << ',' << row[x] << ',' << row[y] << '\n';
      }
    }
    c.report.files["paths.csv"] = out.str();
  }
  json extra = {{"inputs",
                 {{"pre", hex64(fnv1a(pre.file("manifest.json")))},
                  {"post", hex64(fnv1a(post.file("manifest.json")))}}},
                {"schemas",
                 {{"comparison.csv", kComparisonSchema},
                  {"curves.csv", kCurvesSchema},
                  {"paths.csv", kPathsSchema}}}};
  seal(c.report, "eval", extra);
  return c;
}

ReplayReport cmd_replay(const Bundle& bundle) {
  const json m = bundle.manifest();
  ReplayReport report;
  const std::string version = m.value("code_version", "");
  if (version != kCodeVersion) {
    report.warnings.push_back("bundle written by code version " + version + ", replaying with " +
                              kCodeVersion);
  }
  const std::string command = m.value("command", "");
  if (!m.contains("config")) throw BundleMismatch("manifest has no configuration");
  const ExperimentConfig config = config_from_json(m.at("config"));

  Bundle fresh;
  if (command == "run") {
    std::optional<network::TwoSliceNetwork> net;
    if (m.value("network_source", "") == "given") {
      try {
        net = network::network_from_json(json::parse(bundle.file("network.json")));
      } catch (const json::parse_error& e) {
        throw ReplayDivergence(std::string("network.json is unreadable: ") + e.what());
      } catch (const ParseError& e) {
        throw ReplayDivergence(std::string("network.json is unreadable: ") + e.what());
      }
    }
    fresh = cmd_run(config, net);
  } else if (command == "learn") {
    fresh = cmd_learn(config);
  } else if (command == "discover") {
    fresh = cmd_discover(config);
  } else {
    throw BundleMismatch("cannot replay a bundle of command \"" + command + "\"");
  }

  std::set<std::string> names;
  for (const auto& [name, _] : bundle.files) names.insert(name);
  for (const auto& [name, _] : fresh.files) names.insert(name);
  for (const auto& name : names) {
    const auto a = bundle.files.find(name);
    const auto b = fresh.files.find(name);
    if (a == bundle.files.end() || b == fresh.files.end()) {
      report.differing_files.push_back(name);
    } else if (name == "manifest.json" && version != kCodeVersion) {
      // Already reported as a warning; the rest of the manifest must match.
      json recorded = m;
      json replayed = json::parse(b->second);
      recorded.erase("code_version");
      replayed.erase("code_version");
      if (recorded != replayed) report.differing_files.push_back(name);
    } else if (a->second != b->second) {
      report.differing_files.push_back(name);
    }
  }
  if (!report.differing_files.empty()) {
    std::string msg = "replay differs in";
    for (const auto& f : report.differing_files) msg += " " + f;
    for (const auto& w : report.warnings) msg += "; " + w;
    throw ReplayDivergence(msg);
  }
  return report;
}

}  // namespace detour::harness
