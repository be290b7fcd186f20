#include "detour/domain.hpp"

namespace detour {

bool is_valid(const DiscreteObservation& o) {
  return o.depth >= 0 && o.depth < vars::kDepthBins && o.heading_angle >= 0 &&
         o.heading_angle < vars::kHeadingBins && (o.barrier_tactile == 0 || o.barrier_tactile == 1) &&
         (o.target_in_visual_field == 0 || o.target_in_visual_field == 1);
}

bool is_valid(const DiscreteAction& a) {
  return a.step_forward >= 0 && a.step_forward < vars::kStepForwardCategories &&
         a.step_aside >= 0 && a.step_aside < vars::kStepAsideCategories;
}

}  // namespace detour
