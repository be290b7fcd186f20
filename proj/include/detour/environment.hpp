#pragma once

// Continuous 2D world: a square agent walking towards a target, a vertical
// spiked barrier, the two restrictors and the discretisation layer between
// the world and the agent's discrete percepts and decisions.

#include <iosfwd>
#include <vector>

#include "detour/domain.hpp"
#include "detour/rng.hpp"

namespace detour::env {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct WorldConfig {
  double x_min = 0.0;
  double x_max = 10.0;
  double y_min = 0.0;
  double y_max = 15.0;
  Point target{10.0, 7.5};
  Point agent_start{1.0, 7.5};
  double agent_orientation = 0.0;  // radians
  double agent_width = 0.75;       // side of the square body
  bool barrier_exists = true;
  Point barrier_start{4.5, 1.5};
  Point barrier_end{4.5, 15.0};
  double spike_separation = 0.5;
  double spike_length = 0.5;  // drawing only; collision uses the solid segment
  double tactile_range = 2.0; // infinity-norm reach of the barrier sensor
  double visual_range = 2.0;

  // Diagonal of the bounds rectangle, the top of the depth range.
  double max_depth() const;
  // Throws ConfigInvalid on an unusable configuration (e.g. a non-vertical
  // barrier or a start position outside the bounds).
  void validate() const;

  bool operator==(const WorldConfig&) const = default;
};

struct WorldState {
  Point agent_position;
  WorldConfig config;

  static WorldState initial(const WorldConfig& config);
};

struct ContinuousObservation {
  double depth = 0.0;
  double heading_angle = 0.0;  // [-pi, pi]
  int barrier_tactile = 0;
  int target_in_visual_field = 0;

  bool operator==(const ContinuousObservation&) const = default;
};

enum class ActionKind { step_forward, step_aside };

inline constexpr double kMaxStepForward = 2.5;
inline constexpr double kMaxStepAside = 2.5;

// (x, y) + s (cos a, sin a); s in [0, 2.5].
Point step_forward(const WorldState& state, double s);
// Positive s moves to the agent's right, negative to its left:
// (x, y) + s (sin a, -cos a); s in [-2.5, 2.5].
Point step_aside(const WorldState& state, double s);

bool in_bounds(const WorldConfig& config, Point p);
// True when the open square body centred at p overlaps the barrier segment.
// Touching the barrier flush is allowed.
bool body_intersects_barrier(const WorldConfig& config, Point p);
// Largest t in [0, length] such that the body swept from `from` along the
// unit direction `dir` for distance t never overlaps the barrier.
double max_clear_distance(const WorldConfig& config, Point from, Point dir, double length);

// BarrierImpact then MapBounds. A move that would overlap the barrier is
// shortened to the largest clear magnitude; a (shortened) move leaving the
// bounds is dropped entirely.
Point apply_restrictors(const WorldState& state, Point candidate, ActionKind kind);

std::vector<Point> spike_positions(const WorldConfig& config);

ContinuousObservation observe(const WorldState& state);

int depth_bin(double depth, double max_depth);
int heading_bin(double heading_angle);
DiscreteObservation discretize(const ContinuousObservation& c, const WorldConfig& config);

// Half-open [lo, hi), except the top category of each action which is closed.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval step_forward_interval(int category);
Interval step_aside_interval(int category);
int step_forward_category(double s);
int step_aside_category(double s);

struct ContinuousAction {
  double step_forward = 0.0;
  double step_aside = 0.0;

  bool operator==(const ContinuousAction&) const = default;
};

// Uniform draw inside each category's interval. The step-forward value comes
// from rng.substream(0) and the step-aside value from rng.substream(1), so
// the pair depends only on the step stream.
ContinuousAction action_to_continuous(const DiscreteAction& act, const CounterRng& rng);

struct StepResult {
  WorldState state;
  ContinuousObservation observation;
  ContinuousAction sampled;
};

// Step forward, then step aside, each through both restrictors.
StepResult env_step(const WorldState& state, const DiscreteAction& act, const CounterRng& rng);
// Same composition with the continuous magnitudes given directly.
StepResult env_step_continuous(const WorldState& state, const ContinuousAction& action);

struct TrajectoryRow {
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  int sf_cat = 0;
  int sa_cat = 5;
  double sf_cont = 0.0;
  double sa_cont = 0.0;
  int bt = 0;
  int tvf = 0;
  double depth = 0.0;
  double ha = 0.0;
};

void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, const TrajectoryRow& row);

}  // namespace detour::env
