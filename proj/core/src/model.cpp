#include "meshfair/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meshfair {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Switch point between the exact product and the log-space evaluation of
// prod(1+x_k). Below this the exact product is both faster and exact.
constexpr std::size_t kLogSpaceStations = 30;

}  // namespace

WlanParams WlanParams::make(std::string channel_id, double sigma, double t_c,
                            double p_bar, double y) {
  WlanParams p;
  p.channel_id = std::move(channel_id);
  p.sigma = sigma;
  p.t_c = t_c;
  p.a = sigma / t_c;
  p.p_bar = p_bar;
  p.y = y;
  p.check();
  return p;
}

void WlanParams::check() const {
  require(sigma > 0.0, "WlanParams: sigma must be > 0");
  require(t_c > 0.0, "WlanParams: t_c must be > 0");
  require(std::abs(a - sigma / t_c) <= 1e-12 * std::max(1.0, std::abs(a)),
          "WlanParams: a != sigma/t_c");
  require(p_bar >= 1.0, "WlanParams: p_bar must be >= 1");
  require(y >= 0.0, "WlanParams: y must be >= 0");
}

double StationParams::y() const { return tau_to_x(tau_bar); }

void StationParams::check() const {
  require(l_bits > 0.0, "StationParams: l_bits must be > 0");
  require(n_bar >= 1, "StationParams: n_bar must be >= 1");
  require(tau_bar >= 0.0 && tau_bar < 1.0, "StationParams: tau_bar must be in [0,1)");
}

WlanOperatingPoint LogCoords::to_operating_point() const {
  WlanOperatingPoint op;
  op.x.reserve(y_log.size());
  op.n.reserve(eta.size());
  for (double v : y_log) op.x.push_back(std::exp(v));
  for (double v : eta) op.n.push_back(std::exp(v));
  return op;
}

LogCoords LogCoords::from_operating_point(const WlanOperatingPoint& op) {
  LogCoords lc;
  lc.y_log.reserve(op.x.size());
  lc.eta.reserve(op.n.size());
  for (double v : op.x) lc.y_log.push_back(std::log(v));
  for (double v : op.n) lc.eta.push_back(std::log(v));
  return lc;
}

double tau_to_x(double tau) {
  require(tau >= 0.0 && tau < 1.0, "tau_to_x: tau must be in [0,1)");
  return tau / (1.0 - tau);
}

double x_to_tau(double x) {
  require(x >= 0.0, "x_to_tau: x must be >= 0");
  return x / (1.0 + x);
}

double denominator_x(std::span<const double> x, std::span<const double> n, double a) {
  require(a > 0.0, "denominator_x: a must be > 0");
  require(x.size() == n.size(), "denominator_x: x and n sizes differ");
  if (x.size() > kLogSpaceStations) return std::exp(log_denominator_x(x, n, a));
  double burst = 0.0;
  double prod = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    require(x[k] >= 0.0, "denominator_x: x must be >= 0");
    require(n[k] >= 1.0, "denominator_x: n must be >= 1");
    burst += (n[k] - 1.0) * x[k];
    prod *= 1.0 + x[k];
  }
  return a + burst + (prod - 1.0);
}

double denominator_x(const WlanOperatingPoint& op, const WlanParams& params) {
  return denominator_x(op.x, op.n, params.a);
}

double log_denominator_x(std::span<const double> x, std::span<const double> n, double a) {
  require(a > 0.0, "log_denominator_x: a must be > 0");
  require(x.size() == n.size(), "log_denominator_x: x and n sizes differ");
  double burst = 0.0;
  double log_prod = 0.0;  // log prod(1+x_k)
  for (std::size_t k = 0; k < x.size(); ++k) {
    burst += (n[k] - 1.0) * x[k];
    log_prod += std::log1p(x[k]);
  }
  // X = a + burst + expm1(log_prod); all three terms are nonnegative.
  if (log_prod < 600.0) return std::log(a + burst + std::expm1(log_prod));
  // prod(1+x) dominates far beyond double range; combine in log space.
  double lo = std::log(a + burst);
  double hi = log_prod;  // log(expm1(z)) ~ z for large z
  return hi + std::log1p(std::exp(lo - hi));
}

double station_throughput(std::size_t i, const WlanOperatingPoint& op,
                          const WlanParams& params, double l_bits) {
  require(i < op.x.size(), "station_throughput: station index out of range");
  double scale = l_bits > 0.0 ? l_bits / params.t_c : 1.0;
  return op.n[i] * op.x[i] / denominator_x(op, params) * scale;
}

double station_airtime(std::size_t i, const WlanOperatingPoint& op,
                       const WlanParams& params) {
  require(i < op.x.size(), "station_airtime: station index out of range");
  return op.n[i] * op.x[i] / denominator_x(op, params);
}

SlotProbabilities slot_probabilities(const WlanOperatingPoint& op, const WlanParams& params) {
  (void)params;
  double prod = 1.0;
  double sum = 0.0;
  for (double xi : op.x) {
    require(xi >= 0.0, "slot_probabilities: x must be >= 0");
    prod *= 1.0 + xi;
    sum += xi;
  }
  SlotProbabilities p;
  p.idle = 1.0 / prod;
  p.success = sum / prod;
  p.collision = 1.0 - p.idle - p.success;
  return p;
}

double log_throughput(std::size_t i, const LogCoords& lc, const WlanParams& params,
                      double l_bits) {
  require(i < lc.y_log.size(), "log_throughput: station index out of range");
  require(lc.eta.size() == lc.y_log.size(), "log_throughput: eta/y_log sizes differ");
  std::vector<double> x(lc.y_log.size()), n(lc.eta.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = std::exp(lc.y_log[k]);
    n[k] = std::exp(lc.eta[k]);
  }
  double scale = l_bits > 0.0 ? std::log(l_bits / params.t_c) : 0.0;
  return lc.y_log[i] + lc.eta[i] - log_denominator_x(x, n, params.a) + scale;
}

std::vector<double> burst_limit_throughput(std::span<const double> burst_weights,
                                           std::span<const double> x,
                                           double l_bits, double t_c) {
  require(burst_weights.size() == x.size(), "burst_limit_throughput: size mismatch");
  double denom = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) denom += burst_weights[k] * x[k];
  require(denom > 0.0, "burst_limit_throughput: requires some x > 0");
  double scale = l_bits > 0.0 ? l_bits / t_c : 1.0;
  std::vector<double> s(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    s[k] = burst_weights[k] * x[k] / denom * scale;
  return s;
}

}  // namespace meshfair
