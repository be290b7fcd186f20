#pragma once

// Entropy-based coefficients and a greedy parent search over discrete time
// series. All estimates are plug-in (empirical frequency) estimates in nats;
// configurations that never occur contribute nothing.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "detour/distribution.hpp"
#include "detour/environment.hpp"

namespace detour::discovery {

inline constexpr double kDefaultThreshold = 0.05;
inline constexpr int kDefaultLag = 1;
// Plug-in tolerance for coefficients that are non-negative in expectation.
inline constexpr double kEstimationTolerance = 0.01;
// Lagged estimates need on average this many samples per observed
// conditioning configuration.
inline constexpr double kMinCoverage = 2.0;

struct Column {
  std::string name;
  int cardinality = 2;
  std::vector<int> values;
};

// Equal-length named series, optionally cut into independent segments
// (episodes). Lagged windows never straddle a segment start.
class SampleLog {
 public:
  // Throws DomainMismatch on a length mismatch and IndexOutOfRange on a
  // value outside [0, cardinality).
  void add_column(std::string name, int cardinality, std::vector<int> values);
  // Marks t as the first sample of a new segment. Throws IndexOutOfRange
  // when t is not inside the log.
  void start_segment(std::size_t t);

  std::size_t length() const { return length_; }
  const std::vector<Column>& columns() const { return columns_; }
  // Throws UnknownVariable.
  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  const std::vector<std::size_t>& segment_starts() const { return segment_starts_; }

  // Indices t >= lag such that t - lag .. t lie in one segment.
  std::vector<std::size_t> window_ends(int lag) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::size_t> segment_starts_;
  std::size_t length_ = 0;
};

enum class EdgeKind { intra, inter };

struct EdgeCandidate {
  std::string source;
  std::string target;
  double coefficient = 0.0;
  EdgeKind kind = EdgeKind::inter;

  bool operator==(const EdgeCandidate&) const = default;
};

const char* to_string(EdgeKind kind);

Distribution empirical_distribution(std::span<const int> values, int cardinality);

// Difference of entropies normalised by the log of the declared cardinality.
// Throws CardinalityOne when either domain has fewer than two outcomes.
double causal_coefficient(const Distribution& x, const Distribution& y);

// H(O) - H(O | D) over aligned samples.
double causal_action_coefficient(std::span<const int> o, int o_card, std::span<const int> d,
                                 int d_card);

// Plug-in H(target | given...) over aligned samples.
double conditional_entropy(std::span<const int> target, int target_card,
                           const std::vector<std::span<const int>>& given,
                           const std::vector<int>& given_cards);

// H(Y_t | Y_{t-1..t-lag}) - H(Y_t | Y_{t-1..t-lag}, X_{t-1..t-lag}).
// Throws InsufficientData when no window fits or coverage is below
// kMinCoverage.
double transfer_entropy(std::span<const int> x, int x_card, std::span<const int> y, int y_card,
                        int lag = kDefaultLag);
double transfer_entropy(const SampleLog& log, const std::string& x, const std::string& y,
                        int lag = kDefaultLag);

// Fraction of H(Obs_{t+1} | Obs_t) removed by also conditioning on the
// actions and the extra slice-t variables, clamped to [0, 1]. Throws
// ZeroBaseEntropy when the base entropy vanishes.
double normalized_transfer_entropy(const SampleLog& log, const std::vector<std::string>& actions,
                                   const std::string& obs,
                                   const std::vector<std::string>& conditioning = {});

struct Selection {
  std::vector<EdgeCandidate> parents;  // in order of selection
  double base_entropy = 0.0;           // denominator of the reported gains
  double residual_entropy = 0.0;       // H(target_{t+1} | base, parents)
};

// Greedy forward search for slice-t parents of target at t+1.
// When the target itself is a candidate its own past is tested first, with
// gain measured against H(target_{t+1} | base); if accepted it joins the
// base. The other candidates are then added one at a time, each round taking
// the largest drop in conditional entropy divided by H(target_{t+1} | base),
// until that fraction falls below the threshold. Ties go to the
// lexicographically smaller name. Variables in `base` are always
// conditioned on and never reported.
Selection forward_select(const SampleLog& log, const std::string& target,
                         std::vector<std::string> candidates, double threshold = kDefaultThreshold,
                         const std::vector<std::string>& base = {});

// Column names used by the environment sampler.
inline const std::vector<std::string>& observation_columns() {
  static const std::vector<std::string> names = {"D", "HA", "BT", "TVF"};
  return names;
}
inline const std::vector<std::string>& action_columns() {
  static const std::vector<std::string> names = {"SF", "SA"};
  return names;
}

inline constexpr std::uint64_t kSamplingStreamTag = 3;

// Uniform random policy over the 55 discrete actions. Episodes restart from
// the initial state every episode_length steps and each episode is a
// segment. Row t holds the observation at t and the action taken from it.
SampleLog sample_random_policy(const env::WorldConfig& world, std::size_t steps,
                               std::size_t episode_length, std::uint64_t seed);

struct DiscoveryReport {
  std::vector<EdgeCandidate> intra;  // |C(X, Y)| above threshold, oriented X -> Y when C > 0
  std::vector<EdgeCandidate> inter;  // forward_select parents of every observation
  std::vector<EdgeCandidate> action; // C_D(O) above threshold
};

DiscoveryReport discover(const SampleLog& log, double threshold = kDefaultThreshold);

}  // namespace detour::discovery
