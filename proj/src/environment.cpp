#include "detour/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "detour/errors.hpp"
#include "detour/format.hpp"

namespace detour::env {
namespace {

constexpr std::array<double, 6> kForwardEdges = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
constexpr std::array<double, 12> kAsideEdges = {-2.5, -2.1, -1.6, -1.1, -0.7, -0.2,
                                                0.2,  0.7,  1.1,  1.6,  2.1,  2.5};

// Open region the agent centre must stay out of: the barrier segment grown
// by half the body width on every side.
struct ForbiddenBox {
  double x_lo, x_hi, y_lo, y_hi;
};

ForbiddenBox forbidden_box(const WorldConfig& c) {
  const double h = c.agent_width / 2.0;
  const double y0 = std::min(c.barrier_start.y, c.barrier_end.y);
  const double y1 = std::max(c.barrier_start.y, c.barrier_end.y);
  return {c.barrier_start.x - h, c.barrier_start.x + h, y0 - h, y1 + h};
}

int bin_of(double v, const double* edges, std::size_t n_edges) {
  if (v < edges[0] || v > edges[n_edges - 1]) return -1;
  for (std::size_t i = 1; i + 1 < n_edges; ++i) {
    if (v < edges[i]) return static_cast<int>(i - 1);
  }
  return static_cast<int>(n_edges - 2);
}

}  // namespace

double WorldConfig::max_depth() const {
  return std::hypot(x_max - x_min, y_max - y_min);
}

void WorldConfig::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigInvalid("empty world bounds");
  if (!(agent_width > 0.0)) throw ConfigInvalid("agent_width must be positive");
  if (!in_bounds(*this, agent_start)) throw ConfigInvalid("agent_start outside the bounds");
  if (!std::isfinite(agent_orientation)) throw ConfigInvalid("agent_orientation not finite");
  if (!(spike_separation > 0.0)) throw ConfigInvalid("spike_separation must be positive");
  if (!(tactile_range >= 0.0) || !(visual_range >= 0.0)) {
    throw ConfigInvalid("sensor ranges must be non-negative");
  }
  if (barrier_exists) {
    if (barrier_start.x != barrier_end.x) throw ConfigInvalid("barrier must be vertical");
    if (body_intersects_barrier(*this, agent_start)) {
      throw ConfigInvalid("agent_start overlaps the barrier");
    }
  }
}

WorldState WorldState::initial(const WorldConfig& config) {
  config.validate();
  return WorldState{config.agent_start, config};
}

Point step_forward(const WorldState& state, double s) {
  if (!(s >= 0.0 && s <= kMaxStepForward)) throw DomainViolation("step forward outside [0, 2.5]");
  const double a = state.config.agent_orientation;
  return {state.agent_position.x + s * std::cos(a), state.agent_position.y + s * std::sin(a)};
}

Point step_aside(const WorldState& state, double s) {
  if (!(s >= -kMaxStepAside && s <= kMaxStepAside)) {
    throw DomainViolation("step aside outside [-2.5, 2.5]");
  }
  const double a = state.config.agent_orientation;
  return {state.agent_position.x + s * std::sin(a), state.agent_position.y - s * std::cos(a)};
}

bool in_bounds(const WorldConfig& c, Point p) {
  return p.x >= c.x_min && p.x <= c.x_max && p.y >= c.y_min && p.y <= c.y_max;
}

bool body_intersects_barrier(const WorldConfig& c, Point p) {
  if (!c.barrier_exists) return false;
  const ForbiddenBox b = forbidden_box(c);
  return p.x > b.x_lo && p.x < b.x_hi && p.y > b.y_lo && p.y < b.y_hi;
}

double max_clear_distance(const WorldConfig& c, Point from, Point dir, double length) {
  if (!c.barrier_exists || length <= 0.0) return std::max(0.0, length);
  const ForbiddenBox b = forbidden_box(c);
  // Slab intersection of the ray with the open box.
  double enter = -std::numeric_limits<double>::infinity();
  double exit = std::numeric_limits<double>::infinity();
  const std::array<std::array<double, 4>, 2> axes = {
      std::array<double, 4>{from.x, dir.x, b.x_lo, b.x_hi},
      std::array<double, 4>{from.y, dir.y, b.y_lo, b.y_hi}};
  for (const auto& [p, d, lo, hi] : axes) {
    if (d == 0.0) {
      if (!(p > lo && p < hi)) return length;
      continue;
    }
    double t0 = (lo - p) / d;
    double t1 = (hi - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
  }
  if (!(enter < exit) || exit <= 0.0 || enter >= length) return length;
  return std::clamp(enter, 0.0, length);
}

Point apply_restrictors(const WorldState& state, Point candidate, ActionKind kind) {
  (void)kind;  // both actions are straight moves; the kind only labels traces
  const Point from = state.agent_position;
  const WorldConfig& c = state.config;
  Point result = candidate;
  if (c.barrier_exists) {
    const double dx = candidate.x - from.x;
    const double dy = candidate.y - from.y;
    const double length = std::hypot(dx, dy);
    if (length > 0.0) {
      const Point dir{dx / length, dy / length};
      const double clear = max_clear_distance(c, from, dir, length);
      if (clear < length) {
        result = {from.x + clear * dir.x, from.y + clear * dir.y};
        // Land exactly on the face that was hit so the flush position does
        // not leak into the box through rounding.
        const ForbiddenBox b = forbidden_box(c);
        if (dir.x != 0.0) {
          const double face = dir.x > 0.0 ? b.x_lo : b.x_hi;
          if (std::abs(result.x - face) <= 1e-9) result.x = face;
        }
        if (dir.y != 0.0) {
          const double face = dir.y > 0.0 ? b.y_lo : b.y_hi;
          if (std::abs(result.y - face) <= 1e-9) result.y = face;
        }
        if (dir.x == 0.0) result.x = from.x;
        if (dir.y == 0.0) result.y = from.y;
      }
    }
  }
  if (!in_bounds(c, result)) return from;
  return result;
}

std::vector<Point> spike_positions(const WorldConfig& c) {
  std::vector<Point> out;
  if (!c.barrier_exists) return out;
  const double len = std::hypot(c.barrier_end.x - c.barrier_start.x,
                                c.barrier_end.y - c.barrier_start.y);
  const auto n = static_cast<std::size_t>(std::floor(len / c.spike_separation + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = len > 0.0 ? static_cast<double>(k) * c.spike_separation / len : 0.0;
    out.push_back({c.barrier_start.x + t * (c.barrier_end.x - c.barrier_start.x),
                   c.barrier_start.y + t * (c.barrier_end.y - c.barrier_start.y)});
  }
  if (out.empty() || out.back() != c.barrier_end) out.push_back(c.barrier_end);
  return out;
}

ContinuousObservation observe(const WorldState& state) {
  const WorldConfig& c = state.config;
  const Point a = state.agent_position;
  ContinuousObservation o;
  const double dx = c.target.x - a.x;
  const double dy = c.target.y - a.y;
  o.depth = std::hypot(dx, dy);
  o.heading_angle = std::atan2(dy, dx);
  double nearest = std::numeric_limits<double>::infinity();
  for (const Point& s : spike_positions(c)) {
    nearest = std::min(nearest, std::max(std::abs(a.x - s.x), std::abs(a.y - s.y)));
  }
  o.barrier_tactile = nearest <= c.tactile_range ? 1 : 0;
  const double half_pi = std::numbers::pi / 2.0;
  o.target_in_visual_field =
      (o.depth <= c.visual_range && o.heading_angle >= -half_pi && o.heading_angle <= half_pi) ? 1
                                                                                              : 0;
  return o;
}

int depth_bin(double depth, double max_depth) {
  if (!(depth >= 0.0)) return 0;
  const double scaled = 5.0 * depth / max_depth;
  return std::min(vars::kDepthBins - 1, static_cast<int>(std::floor(scaled)));
}

int heading_bin(double heading_angle) {
  const double pi = std::numbers::pi;
  const double clamped = std::clamp(heading_angle, -pi, pi);
  const double scaled = vars::kHeadingBins * (clamped + pi) / (2.0 * pi);
  return std::clamp(static_cast<int>(std::floor(scaled)), 0, vars::kHeadingBins - 1);
}

DiscreteObservation discretize(const ContinuousObservation& c, const WorldConfig& config) {
  return {depth_bin(c.depth, config.max_depth()), heading_bin(c.heading_angle), c.barrier_tactile,
          c.target_in_visual_field};
}

Interval step_forward_interval(int category) {
  if (category < 0 || category >= vars::kStepForwardCategories) {
    throw IndexOutOfRange("step forward category " + std::to_string(category));
  }
  const auto i = static_cast<std::size_t>(category);
  return {kForwardEdges[i], kForwardEdges[i + 1]};
}

Interval step_aside_interval(int category) {
  if (category < 0 || category >= vars::kStepAsideCategories) {
    throw IndexOutOfRange("step aside category " + std::to_string(category));
  }
  const auto i = static_cast<std::size_t>(category);
  return {kAsideEdges[i], kAsideEdges[i + 1]};
}

int step_forward_category(double s) {
  const int bin = bin_of(s, kForwardEdges.data(), kForwardEdges.size());
  if (bin < 0) throw DomainViolation("step forward outside [0, 2.5]");
  return bin;
}

int step_aside_category(double s) {
  const int bin = bin_of(s, kAsideEdges.data(), kAsideEdges.size());
  if (bin < 0) throw DomainViolation("step aside outside [-2.5, 2.5]");
  return bin;
}

ContinuousAction action_to_continuous(const DiscreteAction& act, const CounterRng& rng) {
  const Interval f = step_forward_interval(act.step_forward);
  const Interval s = step_aside_interval(act.step_aside);
  CounterRng forward_rng = rng.substream(0);
  CounterRng aside_rng = rng.substream(1);
  return {forward_rng.uniform(f.lo, f.hi), aside_rng.uniform(s.lo, s.hi)};
}

StepResult env_step_continuous(const WorldState& state, const ContinuousAction& action) {
  WorldState next = state;
  next.agent_position =
      apply_restrictors(next, step_forward(next, action.step_forward), ActionKind::step_forward);
  next.agent_position =
      apply_restrictors(next, step_aside(next, action.step_aside), ActionKind::step_aside);
  return {next, observe(next), action};
}

StepResult env_step(const WorldState& state, const DiscreteAction& act, const CounterRng& rng) {
  return env_step_continuous(state, action_to_continuous(act, rng));
}

void write_trajectory_header(std::ostream& out) {
  out << "step,x,y,sf_cat,sa_cat,sf_cont,sa_cont,bt,tvf,depth,ha\n";
}

void write_trajectory_row(std::ostream& out, const TrajectoryRow& r) {
  out << r.step << ',' << format_double(r.x) << ',' << format_double(r.y) << ',' << r.sf_cat << ','
      << r.sa_cat << ',' << format_double(r.sf_cont) << ',' << format_double(r.sa_cont) << ','
      << r.bt << ',' << r.tvf << ',' << format_double(r.depth) << ',' << format_double(r.ha)
      << '\n';
}

}  // namespace detour::env
