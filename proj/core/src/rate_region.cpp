#include "meshfair/rate_region.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "meshfair/solver.hpp"

namespace meshfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Bisection on f with f(lo) < 0 <= f(hi), relative tolerance on the root.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double rel_tol = 1e-10) {
  for (int it = 0; it < 200 && hi - lo > rel_tol * std::max(hi, 1e-30); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Doubles hi until f(hi) >= 0; returns false when no sign change appears
// before the cutoff (no root: the residual stays negative along the ray).
bool bracket(const std::function<double(double)>& f, double& hi, double cutoff) {
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > cutoff) return false;
  }
  return true;
}

}  // namespace

double pbar_max(double a) {
  require(a > 0.0 && a <= 1.0, "pbar_max: a must be in (0, 1]");
  return 1.0 / (1.0 + a - std::sqrt(2.0 * a));
}

double implied_a(double pidle_target) {
  require(pidle_target > 0.5 && pidle_target <= 1.0,
          "implied_a: target must be in (0.5, 1]");
  // 1 + a - sqrt(2a) = r, quadratic in sqrt(a); smaller root keeps a <= 1.
  double sqrt_a = (std::sqrt(2.0) - std::sqrt(2.0 - 4.0 * (1.0 - pidle_target))) / 2.0;
  return sqrt_a * sqrt_a;
}

double turning_point_residual(std::span<const double> tau, double a) {
  double sum = 0.0;
  double prod = 1.0;
  for (double t : tau) {
    require(t >= 0.0 && t < 1.0, "turning_point_residual: tau must be in [0,1)");
    sum += t;
    prod *= 1.0 - t;
  }
  return sum + (1.0 - a) * prod - 1.0;
}

BoundaryPoint boundary_along_ray(const RayQuery& q) {
  const std::size_t n = q.direction.size();
  require(n > 0 && q.burst.size() == n, "boundary_along_ray: bad query sizes");
  double dir_sum = 0.0;
  for (double y : q.direction) {
    require(y >= 0.0, "boundary_along_ray: direction must be nonnegative");
    dir_sum += y;
  }
  require(std::abs(dir_sum - 1.0) <= 1e-12, "boundary_along_ray: direction must sum to 1");
  require(dir_sum > 0.0, "boundary_along_ray: zero direction");
  for (double nb : q.burst) require(nb >= 1.0, "boundary_along_ray: burst must be >= 1");
  q.params.check();

  auto x_at = [&](double lambda, std::size_t i) {
    return lambda * q.direction[i] / q.burst[i];
  };
  auto pbar_gap = [&](double lambda) {
    double lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) lp += std::log1p(x_at(lambda, i));
    return lp - std::log(q.params.p_bar);
  };
  auto turn_residual = [&](double lambda) {
    std::vector<double> tau(n);
    for (std::size_t i = 0; i < n; ++i) {
      double x = x_at(lambda, i);
      tau[i] = x / (1.0 + x);
    }
    return turning_point_residual(tau, q.params.a);
  };

  double lambda_pbar = 0.0;
  if (q.params.p_bar > 1.0) {
    double hi = 1.0;
    bool ok = bracket(pbar_gap, hi, 1e18);
    require(ok, "boundary_along_ray: p_bar bracket failed");
    lambda_pbar = bisect(pbar_gap, 0.0, hi);
  }

  double lambda_turn = kInf;
  {
    double hi = 1.0;
    if (bracket(turn_residual, hi, 1e15)) lambda_turn = bisect(turn_residual, 0.0, hi);
  }

  BoundaryPoint bp;
  bp.binding = lambda_pbar <= lambda_turn ? BoundaryBinding::pbar_constraint
                                          : BoundaryBinding::turning_point;
  bp.lambda_star = std::min(lambda_pbar, lambda_turn);
  bp.x_star.resize(n);
  bp.throughput.resize(n);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x_at(bp.lambda_star, i);
  double X = denominator_x(xs, q.burst, q.params.a);
  for (std::size_t i = 0; i < n; ++i) {
    bp.x_star[i] = xs[i];
    bp.throughput[i] = q.burst[i] * xs[i] / X;
  }
  return bp;
}

double efficiency_ratio(int n, double a) {
  require(n >= 1, "efficiency_ratio: n must be >= 1");
  double pb = pbar_max(a);
  double x_c = std::exp(std::log(pb) / n) - 1.0;
  double total_c = n * x_c / (a + pb - 1.0);
  if (n == 1) return total_c;  // unconstrained supremum is l_bits/t_c = 1
  auto residual = [&](double tau) {
    double t = std::min(tau, 1.0 - 1e-16);
    return n * t + (1.0 - a) * std::pow(1.0 - t, n) - 1.0;
  };
  double tau_u = bisect(residual, 0.0, 1.0);
  double x_u = tau_u / (1.0 - tau_u);
  double total_u = n * x_u / (a + std::pow(1.0 + x_u, n) - 1.0);
  return total_c / total_u;
}

std::optional<WlanOperatingPoint> finite_load_feasible(const WlanParams& wlan,
                                                       const std::vector<StationLoad>& loads) {
  wlan.check();
  const std::size_t n = loads.size();
  require(n > 0, "finite_load_feasible: no stations");

  WlanOperatingPoint op;
  op.x.assign(n, 0.0);
  op.n.assign(n, 1.0);

  std::vector<double> x_fixed, n_fixed;
  std::vector<std::size_t> active;  // unsaturated stations with positive demand
  double airtime_demand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const StationLoad& ld = loads[i];
    ld.params.check();
    if (ld.saturated) {
      op.x[i] = ld.params.y();
      op.n[i] = ld.params.n_bar;
      x_fixed.push_back(op.x[i]);
      n_fixed.push_back(op.n[i]);
    } else if (ld.offered_rate > 0.0) {
      active.push_back(i);
      airtime_demand += ld.offered_rate * wlan.t_c / ld.params.l_bits;
    }
  }
  if (active.empty()) return op;           // zero offered load is trivially served
  if (airtime_demand >= 1.0) return std::nullopt;  // outside the airtime simplex

  solver::LogProgram prog;
  solver::DenomBlock denom = solver::DenomBlock::fold(wlan.a, x_fixed, n_fixed);
  std::vector<int> y_var(n, -1), eta_var(n, -1);
  for (std::size_t i : active) {
    // Admissible attempt rates stop at the station's design parameter when
    // one is configured.
    double y_cap = loads[i].params.tau_bar > 0.0 ? loads[i].params.y() : 1e6;
    y_var[i] = prog.add_var("y." + loads[i].params.station_id, std::log(1e-9),
                            std::log(y_cap));
    denom.y_var.push_back(y_var[i]);
    if (loads[i].params.n_bar > 1) {
      eta_var[i] = prog.add_var("eta." + loads[i].params.station_id, 0.0,
                                std::log(double(loads[i].params.n_bar)));
      denom.eta_var.push_back(eta_var[i]);
    } else {
      denom.eta_var.push_back(-1);
    }
  }
  int obj = prog.add_var("objective", -400.0, 400.0);

  // Balance relaxed to demand <= N x / X * l/t_c per unsaturated station.
  for (std::size_t i : active) {
    solver::Constraint c;
    c.label = "balance." + loads[i].params.station_id;
    double u = loads[i].offered_rate * wlan.t_c / loads[i].params.l_bits;
    c.affine.constant = std::log(u);
    c.affine.add(y_var[i], -1.0);
    if (eta_var[i] >= 0) c.affine.add(eta_var[i], -1.0);
    c.denom.push_back(denom);
    prog.constraints.push_back(std::move(c));
  }
  // Minimize sum log(x N): objective variable bounded by the negated sum.
  {
    solver::Constraint c;
    c.label = "objective.bound";
    c.affine.add(obj, 1.0);
    for (std::size_t i : active) {
      c.affine.add(y_var[i], 1.0);
      if (eta_var[i] >= 0) c.affine.add(eta_var[i], 1.0);
    }
    prog.constraints.push_back(std::move(c));
  }
  prog.objective = obj;

  solver::Solution sol = solver::solve(prog);
  if (sol.status == solver::SolveStatus::infeasible) return std::nullopt;

  for (std::size_t i : active) {
    op.x[i] = std::exp(sol.values[y_var[i]]);
    op.n[i] = eta_var[i] >= 0 ? std::exp(sol.values[eta_var[i]]) : 1.0;
  }
  // Polish to the exact balance fixed point x_i = u_i X(x) / N_i.
  for (int it = 0; it < 200; ++it) {
    double X = denominator_x(op.x, op.n, wlan.a);
    double worst = 0.0;
    for (std::size_t i : active) {
      double u = loads[i].offered_rate * wlan.t_c / loads[i].params.l_bits;
      double next = u * X / op.n[i];
      worst = std::max(worst, std::abs(next - op.x[i]) / std::max(next, 1e-300));
      op.x[i] = next;
    }
    if (worst < 1e-15) break;
  }
  // The fixed point can drift infeasible when the solver sat on a cap.
  double X = denominator_x(op.x, op.n, wlan.a);
  for (std::size_t i : active) {
    double u = loads[i].offered_rate * wlan.t_c / loads[i].params.l_bits;
    if (std::abs(op.n[i] * op.x[i] / X - u) > 1e-8 * std::max(u, 1e-300))
      return std::nullopt;
    double y_cap = loads[i].params.tau_bar > 0.0 ? loads[i].params.y() : 1e6;
    if (op.x[i] > y_cap * (1.0 + 1e-6)) return std::nullopt;
  }
  return op;
}

}  // namespace meshfair
