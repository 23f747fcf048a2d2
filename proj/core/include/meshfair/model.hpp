#ifndef MESHFAIR_MODEL_HPP
#define MESHFAIR_MODEL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace meshfair {

// Per-channel MAC constants. All durations in seconds (or any consistent
// unit: only the ratio a = sigma/t_c enters the normalized model).
struct WlanParams {
  std::string channel_id;
  double sigma = 0.01;  // PHY idle slot duration
  double t_c = 1.0;     // duration of one frame transmission and of a collision
  double a = 0.01;      // sigma / t_c
  double p_bar = 1.0;   // idle-probability cap, >= 1: prod(1+x_k) <= p_bar
  double y = 0.0;       // shared attempt-rate design parameter, 0 = unset

  static WlanParams make(std::string channel_id, double sigma, double t_c,
                         double p_bar, double y = 0.0);
  void check() const;  // throws std::invalid_argument on a broken invariant
};

// Per-station constants for single-WLAN model work.
struct StationParams {
  std::string station_id;
  double l_bits = 1.0;   // payload bits per frame (D_i = N_i * l_bits)
  int n_bar = 1;         // max burst size, frames per transmission opportunity
  double tau_bar = 0.0;  // attempt design probability in [0,1)

  double y() const;  // tau_bar / (1 - tau_bar)
  void check() const;
};

// Free variables of every optimization: attempt rates x = tau/(1-tau) and
// mean burst sizes, one entry per transmitting station of a WLAN.
struct WlanOperatingPoint {
  std::vector<double> x;  // >= 0
  std::vector<double> n;  // in [1, n_bar]
};

// Log-domain coordinates y = log x, eta = log N used by the convex machinery.
struct LogCoords {
  std::vector<double> y_log;
  std::vector<double> eta;
  std::optional<std::vector<double>> mu;  // log-throughput per station

  WlanOperatingPoint to_operating_point() const;
  static LogCoords from_operating_point(const WlanOperatingPoint& op);
};

// x = tau/(1-tau) and its inverse. Domain errors on tau outside [0,1) / x < 0.
double tau_to_x(double tau);
double x_to_tau(double x);

// Slot-time denominator X(x,N) = a + sum_k (N_k-1) x_k + prod_k (1+x_k) - 1.
// Empty station set yields the empty product, X = a.
double denominator_x(std::span<const double> x, std::span<const double> n, double a);
double denominator_x(const WlanOperatingPoint& op, const WlanParams& params);

// log X evaluated stably in log space (used for n > 30 and by the solver).
double log_denominator_x(std::span<const double> x, std::span<const double> n, double a);

// Station throughput s_i = (N_i x_i / X) * (l_bits / t_c). With l_bits unset
// (<= 0) the result is in normalized airtime-rate units, l_bits/t_c = 1.
double station_throughput(std::size_t i, const WlanOperatingPoint& op,
                          const WlanParams& params, double l_bits = 0.0);

// Mean fraction of time station i spends on successful transmissions,
// t_i = N_i x_i / X.
double station_airtime(std::size_t i, const WlanOperatingPoint& op,
                       const WlanParams& params);

struct SlotProbabilities {
  double idle = 1.0;
  double success = 0.0;
  double collision = 0.0;  // complement, so the three sum to 1 exactly
};
SlotProbabilities slot_probabilities(const WlanOperatingPoint& op, const WlanParams& params);

// log s_i as a concave function of the log coordinates.
double log_throughput(std::size_t i, const LogCoords& lc, const WlanParams& params,
                      double l_bits = 0.0);

// Unbounded-burst limit s_i -> (n_i x_i / sum_j n_j x_j) * (l_bits/t_c);
// the airtime simplex boundary. Requires some x > 0.
std::vector<double> burst_limit_throughput(std::span<const double> burst_weights,
                                           std::span<const double> x,
                                           double l_bits = 0.0, double t_c = 1.0);

}  // namespace meshfair

#endif
