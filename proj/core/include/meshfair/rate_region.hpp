#ifndef MESHFAIR_RATE_REGION_HPP
#define MESHFAIR_RATE_REGION_HPP

#include <optional>
#include <span>
#include <vector>

#include "meshfair/model.hpp"

namespace meshfair {

// Largest idle-probability cap that still pins the boundary to the
// P_idle = 1/p_bar constraint: 1 / (1 + a - sqrt(2a)). Valid for 0 < a <= 1.
double pbar_max(double a);

// Inverse of the above: the a implied by a given P_idle target 1 + a - sqrt(2a).
double implied_a(double pidle_target);

// Signed residual sum(tau_i) + (1-a) prod(1-tau_i) - 1; zero on the
// unconstrained rate-region boundary.
double turning_point_residual(std::span<const double> tau, double a);

struct RayQuery {
  std::vector<double> direction;  // nonneg, sums to 1
  std::vector<double> burst;      // N per station, fixed at its upper bound
  WlanParams params;
};

enum class BoundaryBinding { pbar_constraint, turning_point };

struct BoundaryPoint {
  double lambda_star = 0.0;
  std::vector<double> x_star;      // lambda* y_i / N_i
  BoundaryBinding binding = BoundaryBinding::pbar_constraint;
  std::vector<double> throughput;  // normalized units (l_bits/t_c = 1)
};

// Walks the ray x_i = lambda y_i / N_i to the rate-region boundary:
// lambda* = min(lambda_pbar, lambda_turn), both found by bracketed bisection.
BoundaryPoint boundary_along_ray(const RayQuery& q);

// Ratio of the p_bar-constrained symmetric throughput to the unconstrained
// boundary throughput, n saturated single-frame stations. For n = 1 the
// unconstrained reference is the x -> inf supremum l_bits/t_c.
double efficiency_ratio(int n, double a);

struct StationLoad {
  StationParams params;
  bool saturated = false;
  double offered_rate = 0.0;  // bits/s (or normalized) for unsaturated stations
};

// Solves the finite-load throughput balance equations for the unsaturated
// stations, saturated stations pinned at x = y_i, N = n_bar. Returns the
// operating point when the balance set is non-empty, absent otherwise.
std::optional<WlanOperatingPoint> finite_load_feasible(const WlanParams& wlan,
                                                       const std::vector<StationLoad>& loads);

}  // namespace meshfair

#endif
