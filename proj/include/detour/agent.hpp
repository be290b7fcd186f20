#pragma once

// Acting, noticing and restructuring: MEU epochs in the world, utility
// surprise and per-variable surprise tests, selection of the variables tied
// to a latent cause, insertion of a binary hidden variable and hard weighted
// EM for the tables it touches.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detour/domain.hpp"
#include "detour/environment.hpp"
#include "detour/inference.hpp"
#include "detour/initial_network.hpp"
#include "detour/network.hpp"
#include "detour/rng.hpp"
#include "detour/surprise.hpp"

namespace detour::agent {

// Centre of the Dirichlet prior used when re-estimating the children of HV.
enum class PriorReference {
  previous,  // the table the child had when HV was inserted
  uniform,   // flat; strength = cardinality gives plain add-one smoothing
};

enum class Imputation { hard, sampled };

struct AgentConfig {
  double alpha = 0.2;
  double epsilon = 1e-3;
  int max_iters = 50;
  int epoch_budget = 30;
  int steps_per_epoch = 100;
  int min_rejections = 2;
  // Total pseudo-count mass of the prior on each child column.
  double map_prior_strength = 1.0;
  PriorReference prior_reference = PriorReference::previous;
  Imputation imputation = Imputation::hard;
  double heading_balance = network::kDefaultHeadingBalance;

  // Throws ConfigInvalid.
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

struct StepRecord {
  int epoch = 0;
  int t = 0;
  DiscreteObservation obs_t;
  DiscreteObservation obs_t1;
  DiscreteAction action;
  double meu = 0.0;
  double realized_utility = 0.0;
  double c_u = 0.0;
  double influence_p0 = 0.5;
  std::array<surprise::SurpriseVerdict, 4> per_variable{};  // canonical order
  double weight = 1.0;
};

struct EpochSummary {
  int epoch = 0;
  std::vector<StepRecord> records;
  bool detected = false;
  std::vector<std::string> selected_variables;  // canonical order
  std::array<int, 4> rejection_counts{};        // gated rejections per variable
  bool reached_target = false;
  int barrier_events = 0;                       // steps ending with BT = 1
};

struct HiddenVariableSpec {
  std::string name = std::string(vars::kHidden);
  std::vector<std::string> parents;   // slice-t observation variables
  std::vector<std::string> children;  // slice-(t+1) observation variables
  int cardinality = 2;
};

// XM shape: the same selected variables are parents and children.
HiddenVariableSpec xm_spec(const std::vector<std::string>& selected);

// sign(U - MEU) times the surprise coefficient of the realised utility atom.
// A realised value outside the predicted support gives a signed infinity.
double utility_surprise(const inference::UtilityDistribution& u_dist, double realized_u,
                        double meu);

// Surprise bookkeeping for one transition. `weight`, `t` and `epoch` are
// left at their defaults for the caller to fill.
StepRecord detect_step(const network::TwoSliceNetwork& net, const DiscreteObservation& obs_t,
                       const DiscreteAction& act, const DiscreteObservation& obs_t1,
                       double alpha);

// w_0 = 1, w_i = 1 + |u_{i-1} - u_i| over realised utilities.
void assign_weights(std::vector<StepRecord>& records);

// Gated tallies: rejections counted only at steps with influence_p0 < 0.5.
std::array<int, 4> rejection_counts(const std::vector<StepRecord>& records);

std::vector<std::string> select_related_variables(const EpochSummary& epoch, int min_rejections);

network::TwoSliceNetwork insert_hidden_variable(const network::TwoSliceNetwork& net,
                                                const HiddenVariableSpec& spec);

struct EmIteration {
  int iteration = 0;
  double max_delta = 0.0;    // max-abs change of HV and children tables
  int hv_ones = 0;           // records imputed HV = 1
  double weighted_hv_ones = 0.0;
  // Weighted complete-data log-likelihood of the imputed data, before and
  // after the M-step.
  double loglik_before = 0.0;
  double loglik_after = 0.0;
  // The same plus the Dirichlet pseudo-count term; the M-step maximises
  // this exactly, so after >= before always holds.
  double objective_before = 0.0;
  double objective_after = 0.0;
};

struct EmResult {
  network::TwoSliceNetwork network;
  std::vector<EmIteration> log;
  bool converged = false;
};

struct EmOptions {
  double epsilon = 1e-3;
  int max_iters = 50;
  double prior_strength = 1.0;
  PriorReference prior_reference = PriorReference::previous;
  Imputation imputation = Imputation::hard;
  // Tables the children had before HV was inserted (indexed by canonical
  // variable); used as prior centre with PriorReference::previous. When
  // empty, the HV = 0 slice of the current child table is used.
  std::vector<std::optional<network::ConditionalTable>> reference_tables;
  std::uint64_t seed = 0;  // for Imputation::sampled
};

EmResult hard_weighted_em(const network::TwoSliceNetwork& net,
                          const std::vector<StepRecord>& data, const EmOptions& options);

// Posterior of HV given a full transition under `net`.
std::array<double, 2> hidden_posterior(const network::TwoSliceNetwork& net,
                                       const StepRecord& record);

struct EpochResult {
  EpochSummary summary;
  std::vector<env::TrajectoryRow> trajectory;
};

// One epoch from the start state acting by MEU; ends when TVF = 1 is
// observed or after steps_per_epoch steps. Step t draws from
// rng.substream(t).
EpochResult run_epoch(const network::TwoSliceNetwork& net, const env::WorldConfig& world,
                      const AgentConfig& config, const CounterRng& rng, int epoch_index);

inline constexpr std::uint64_t kEpochStreamTag = 1;
inline constexpr std::uint64_t kEmStreamTag = 2;

CounterRng epoch_stream(std::uint64_t seed, int epoch);

struct LearningResult {
  network::TwoSliceNetwork initial;
  network::TwoSliceNetwork final_network;
  std::vector<EpochResult> epochs;
  std::optional<int> insertion_epoch;
  std::vector<std::string> selected_variables;
  std::vector<std::vector<EmIteration>> em_logs;  // one per EM call
  std::vector<double> epoch_deltas;               // CPT change per EM call
  bool converged = false;
};

// Plays epochs until the first detection, inserts HV with the selected
// variables as parents and children, and from then on runs hard weighted EM
// on each epoch's own records. Stops when an EM call after the insertion
// epoch changes no CPT entry by more than epsilon, or at the epoch budget.
LearningResult run_learning_process(const env::WorldConfig& world, const AgentConfig& config,
                                    std::uint64_t seed);

// Epochs with a fixed network and no learning.
std::vector<EpochResult> run_fixed(const network::TwoSliceNetwork& net,
                                   const env::WorldConfig& world, const AgentConfig& config,
                                   std::uint64_t seed, int epochs);

}  // namespace detour::agent
