#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace detour {

// Discrete percept of the agent. Bin layouts are fixed by the discretisation
// in environment.hpp.
struct DiscreteObservation {
  int depth = 0;                  // 0..4
  int heading_angle = 5;          // 0..10, 5 = target straight ahead
  int barrier_tactile = 0;        // 0/1
  int target_in_visual_field = 0; // 0/1

  bool operator==(const DiscreteObservation&) const = default;
};

// Category indices of the two decision nodes.
struct DiscreteAction {
  int step_forward = 0;  // 0..4
  int step_aside = 5;    // 0..10, 5 = no lateral motion

  bool operator==(const DiscreteAction&) const = default;
};

namespace vars {
inline constexpr std::string_view kDepth = "D";
inline constexpr std::string_view kHeading = "HA";
inline constexpr std::string_view kBarrier = "BT";
inline constexpr std::string_view kVisual = "TVF";
inline constexpr std::string_view kStepForward = "SF";
inline constexpr std::string_view kStepAside = "SA";
inline constexpr std::string_view kHidden = "HV";

inline constexpr int kDepthBins = 5;
inline constexpr int kHeadingBins = 11;
inline constexpr int kStepForwardCategories = 5;
inline constexpr int kStepAsideCategories = 11;
inline constexpr int kHiddenCardinality = 2;

// Canonical order of the observation variables everywhere (joint indexing,
// CSV columns, surprise maps).
inline constexpr std::array<std::string_view, 4> kObservationNames = {kDepth, kHeading, kBarrier,
                                                                      kVisual};
inline constexpr std::array<int, 4> kObservationCards = {kDepthBins, kHeadingBins, 2, 2};
inline constexpr std::size_t kJointObservationCount = 5 * 11 * 2 * 2;
inline constexpr std::size_t kActionCount = kStepForwardCategories * kStepAsideCategories;
}  // namespace vars

inline int observation_value(const DiscreteObservation& o, std::size_t var) {
  switch (var) {
    case 0: return o.depth;
    case 1: return o.heading_angle;
    case 2: return o.barrier_tactile;
    default: return o.target_in_visual_field;
  }
}

inline std::array<int, 4> to_array(const DiscreteObservation& o) {
  return {o.depth, o.heading_angle, o.barrier_tactile, o.target_in_visual_field};
}

inline DiscreteObservation observation_from_array(const std::array<int, 4>& v) {
  return DiscreteObservation{v[0], v[1], v[2], v[3]};
}

// Row-major index over (D, HA, BT, TVF).
inline std::size_t joint_index(const DiscreteObservation& o) {
  return ((static_cast<std::size_t>(o.depth) * 11 + static_cast<std::size_t>(o.heading_angle)) * 2 +
          static_cast<std::size_t>(o.barrier_tactile)) * 2 +
         static_cast<std::size_t>(o.target_in_visual_field);
}

inline DiscreteObservation observation_at(std::size_t joint) {
  DiscreteObservation o;
  o.target_in_visual_field = static_cast<int>(joint % 2);
  joint /= 2;
  o.barrier_tactile = static_cast<int>(joint % 2);
  joint /= 2;
  o.heading_angle = static_cast<int>(joint % 11);
  o.depth = static_cast<int>(joint / 11);
  return o;
}

// Row-major index over (SF, SA); also the MEU tie-break order.
inline std::size_t action_index(const DiscreteAction& a) {
  return static_cast<std::size_t>(a.step_forward) * 11 + static_cast<std::size_t>(a.step_aside);
}

inline DiscreteAction action_at(std::size_t index) {
  return DiscreteAction{static_cast<int>(index / 11), static_cast<int>(index % 11)};
}

bool is_valid(const DiscreteObservation& o);
bool is_valid(const DiscreteAction& a);

}  // namespace detour
