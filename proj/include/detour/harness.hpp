#pragma once

// Experiment runner: configuration, trace bundles and the five commands
// (discover, learn, run, eval, replay). Every command is a pure function of
// its configuration and seed; bundles are held in memory as file name ->
// bytes so that replay can compare them exactly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detour/agent.hpp"
#include "detour/discovery.hpp"
#include "detour/environment.hpp"
#include "detour/network.hpp"

namespace detour::harness {

inline constexpr const char* kCodeVersion = "0.1.0";

inline constexpr const char* kManifestSchema = "detour.manifest/1";
inline constexpr const char* kConfigSchema = "detour.config/1";
inline constexpr const char* kTrajectorySchema = "detour.trajectory/1";
inline constexpr const char* kStepsSchema = "detour.steps/1";
inline constexpr const char* kEpochsSchema = "detour.epochs/1";
inline constexpr const char* kEdgesSchema = "detour.edges/1";
inline constexpr const char* kSamplesSchema = "detour.samples/1";
inline constexpr const char* kTransferSchema = "detour.transfer/1";
inline constexpr const char* kComparisonSchema = "detour.comparison/1";
inline constexpr const char* kCurvesSchema = "detour.curves/1";
inline constexpr const char* kPathsSchema = "detour.paths/1";

struct DiscoveryConfig {
  double threshold = discovery::kDefaultThreshold;
  int lag = discovery::kDefaultLag;
  int steps = 10000;
  // Forward steps only go east, so long random episodes end up pinned to
  // the far wall where SF has no effect.
  int episode_length = 20;

  bool operator==(const DiscoveryConfig&) const = default;
};

struct ExperimentConfig {
  env::WorldConfig world;
  agent::AgentConfig agent;
  DiscoveryConfig discovery;
  std::uint64_t seed = 1;
  int run_epochs = 5;  // epochs played by `run`
  std::string output_dir = "out";

  // Throws ConfigInvalid.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys and ill-typed values throw
// ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// File name -> exact bytes. manifest.json is always present.
struct Bundle {
  std::map<std::string, std::string> files;

  const std::string& file(const std::string& name) const;  // throws BundleMismatch
  nlohmann::json manifest() const;
};

void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);
Bundle read_bundle(const std::filesystem::path& dir);

// Random-policy samples, edge report and transfer entropies.
Bundle cmd_discover(const ExperimentConfig& config);
// Full learning process; pre/post network snapshots and per-epoch traces.
Bundle cmd_learn(const ExperimentConfig& config);
// run_epochs epochs with a fixed network (the initial one when none given).
Bundle cmd_run(const ExperimentConfig& config,
               const std::optional<network::TwoSliceNetwork>& net = std::nullopt);

// Per-bundle behaviour metrics over all epochs of a run bundle.
struct RunMetrics {
  int epochs = 0;
  double barrier_events_per_epoch = 0.0;
  double mean_cs_bt = 0.0;
  double mean_cs_depth = 0.0;
  double mean_cs_utility = 0.0;  // mean |C_U|
  double success_rate = 0.0;
  double mean_steps_to_target = 0.0;  // over successful epochs; 0 when none
};

// Non-finite surprise values are capped at this before averaging.
inline constexpr double kSurpriseCap = 50.0;

RunMetrics metrics_of(const Bundle& run_bundle);

struct Comparison {
  RunMetrics pre;
  RunMetrics post;
  Bundle report;  // comparison.csv, curves.csv, paths.csv, manifest.json
};

// Both bundles must come from `run` with the same configuration and seed;
// otherwise throws BundleMismatch.
Comparison cmd_eval(const Bundle& pre, const Bundle& post);

struct ReplayReport {
  std::vector<std::string> warnings;
  std::vector<std::string> differing_files;
};

// Re-executes the command recorded in the manifest and compares every file
// byte for byte. Throws ReplayDivergence listing the differing files; a code
// version mismatch is reported as a warning.
ReplayReport cmd_replay(const Bundle& bundle);

}  // namespace detour::harness
