#include "detour/initial_network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "detour/errors.hpp"

namespace detour::network {

HeadingTerms heading_terms(int sf, int sa, double p) {
  const double x = static_cast<double>(sa - 5) / 5.0;
  const double fwd = static_cast<double>(sf) / 6.0;
  const double pos = std::max(0.0, x);
  const double neg = -std::min(0.0, x);
  HeadingTerms f;
  f.f1 = p * (1.0 - std::abs(x)) + (1.0 - p) * (1.0 - fwd);
  f.f1_minus = p * pos + (1.0 - p) * fwd;
  f.f1_plus = p * neg;
  f.f2_minus = p * neg + (1.0 - p) * fwd;
  f.f2_plus = p * pos;
  f.f3_minus = p * neg;
  f.f3_plus = p * pos + (1.0 - p) * fwd;
  f.f4_minus = p * pos;
  f.f4_plus = p * neg + (1.0 - p) * fwd;
  return f;
}

double barrier_release(int sa) {
  if (sa < 5) return 0.5;
  if (sa == 5) return 0.6;
  return 0.65;
}

double barrier_clear(int sa) { return sa == 5 ? 0.99 : 0.95; }

std::vector<double> depth_column(int depth_t, int sf) {
  std::vector<double> col(vars::kDepthBins, 0.0);
  if (depth_t == 0) {
    col[0] = 0.9999;
    col[1] = 0.0001;
    return col;
  }
  const double fwd = static_cast<double>(sf) / 6.0;
  col[static_cast<std::size_t>(depth_t - 1)] = fwd;
  col[static_cast<std::size_t>(depth_t)] = 1.0 - fwd;
  return col;
}

std::vector<double> heading_column(int heading_t, int sf, int sa, double p) {
  const HeadingTerms f = heading_terms(sf, sa, p);
  std::vector<double> col(vars::kHeadingBins, 0.0);
  // (row below, row above) around the diagonal F1; columns 0 and 10 wrap.
  double below = 0.0;
  double above = 0.0;
  switch (heading_t) {
    case 0: case 1: case 2: below = f.f1_minus; above = f.f1_plus; break;
    case 3: case 4: case 5: below = f.f2_minus; above = f.f2_plus; break;
    case 6: case 7: below = f.f3_minus; above = f.f3_plus; break;
    default: below = f.f4_minus; above = f.f4_plus; break;
  }
  const int n = vars::kHeadingBins;
  col[static_cast<std::size_t>(heading_t)] = f.f1;
  col[static_cast<std::size_t>((heading_t + n - 1) % n)] += below;
  col[static_cast<std::size_t>((heading_t + 1) % n)] += above;
  return col;
}

std::vector<double> barrier_column(int barrier_t, int sa) {
  const double stay_clear = barrier_t == 0 ? barrier_clear(sa) : barrier_release(sa);
  return {stay_clear, 1.0 - stay_clear};
}

std::vector<double> visual_column(int visual_t, int sa) {
  if (visual_t == 0) return {0.9, 0.1};
  const double lateral = std::abs(sa - 5) / 5.0;
  return {0.4 * lateral + 0.01 * (1.0 - lateral), 0.6 * lateral + 0.99 * (1.0 - lateral)};
}

std::vector<double> initial_column(std::size_t var, int x_t, int sf, int sa, double p) {
  switch (var) {
    case 0: return depth_column(x_t, sf);
    case 1: return heading_column(x_t, sf, sa, p);
    case 2: return barrier_column(x_t, sa);
    case 3: return visual_column(x_t, sa);
    default: throw IndexOutOfRange("observation variable " + std::to_string(var));
  }
}

TwoSliceNetwork build_initial_network(double heading_balance) {
  if (!(heading_balance >= 0.0 && heading_balance <= 1.0)) {
    throw InvalidNetwork("heading balance must lie in [0, 1]");
  }
  std::vector<ConditionalTable> tables;
  for (std::size_t v = 0; v < vars::kObservationNames.size(); ++v) {
    const int card = vars::kObservationCards[v];
    std::vector<double> values;
    for (int x = 0; x < card; ++x) {
      for (int sf = 0; sf < vars::kStepForwardCategories; ++sf) {
        for (int sa = 0; sa < vars::kStepAsideCategories; ++sa) {
          const auto col = initial_column(v, x, sf, sa, heading_balance);
          values.insert(values.end(), col.begin(), col.end());
        }
      }
    }
    const std::string name(vars::kObservationNames[v]);
    tables.emplace_back(name, card,
                        std::vector<std::string>{name, std::string(vars::kStepForward),
                                                 std::string(vars::kStepAside)},
                        std::vector<int>{card, vars::kStepForwardCategories,
                                         vars::kStepAsideCategories},
                        std::move(values));
  }
  return TwoSliceNetwork(std::move(tables));
}

}  // namespace detour::network
