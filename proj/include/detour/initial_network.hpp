#pragma once

// Hand-specified transition model the agent starts from. Every column is
// indexed by the variable's value at t; entry i is P(X_{t+1} = i | X_t = j).

#include <vector>

#include "detour/network.hpp"

namespace detour::network {

// Weight of the step-aside term against the step-forward term in the
// heading transition.
inline constexpr double kDefaultHeadingBalance = 0.2;

struct HeadingTerms {
  double f1 = 0.0;
  double f1_minus = 0.0;
  double f1_plus = 0.0;
  double f2_minus = 0.0;
  double f2_plus = 0.0;
  double f3_minus = 0.0;
  double f3_plus = 0.0;
  double f4_minus = 0.0;
  double f4_plus = 0.0;
};

HeadingTerms heading_terms(int sf, int sa, double p = kDefaultHeadingBalance);

// P(BT_{t+1} = 0 | BT_t = 1, SA): larger for rightward steps.
double barrier_release(int sa);
// P(BT_{t+1} = 0 | BT_t = 0, SA): lower when stepping aside.
double barrier_clear(int sa);

std::vector<double> depth_column(int depth_t, int sf);
std::vector<double> heading_column(int heading_t, int sf, int sa,
                                   double p = kDefaultHeadingBalance);
std::vector<double> barrier_column(int barrier_t, int sa);
std::vector<double> visual_column(int visual_t, int sa);

// Column of observation variable `var` (canonical order) at value x_t.
std::vector<double> initial_column(std::size_t var, int x_t, int sf, int sa,
                                   double p = kDefaultHeadingBalance);

// One CPT per observation variable with parents (X_t, SF, SA).
TwoSliceNetwork build_initial_network(double heading_balance = kDefaultHeadingBalance);

}  // namespace detour::network
