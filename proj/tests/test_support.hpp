#ifndef MESHFAIR_TEST_SUPPORT_HPP
#define MESHFAIR_TEST_SUPPORT_HPP

#include <random>
#include <string>
#include <vector>

#include "meshfair/rate_region.hpp"
#include "meshfair/topology.hpp"

namespace meshfair::test {

inline std::string scenario_path(const std::string& name) {
  return std::string(MESHFAIR_SCENARIO_DIR) + "/" + name;
}

// Single WLAN: n source stations with `flows_per_station` one-hop flows each
// to a shared sink. Normalized units (l_bits = t_c = 1) unless overridden.
inline MeshTopology single_wlan(int n_stations, int flows_per_station, double a,
                                double p_bar, double l_bits = 1.0, double t_c = 1.0) {
  MeshTopology topo;
  topo.wlans.push_back(WlanParams::make("w0", a * t_c, t_c, p_bar));
  Station sink{"sink", {"w0"}, true};
  for (int k = 0; k < n_stations; ++k) {
    std::string id = "sta" + std::to_string(k);
    topo.stations.push_back({id, {"w0"}, false});
    for (int j = 0; j < flows_per_station; ++j) {
      Flow f;
      f.id = "f" + std::to_string(k) + "_" + std::to_string(j);
      f.source = id;
      f.l_bits = l_bits;
      f.route.push_back({id, "sink", "w0", 0.0});
      topo.flows.push_back(std::move(f));
    }
  }
  topo.stations.push_back(sink);
  return topo;
}

struct Uniform {
  std::mt19937_64 gen;
  explicit Uniform(std::uint64_t seed) : gen(seed) {}
  double operator()(double lo, double hi) {
    return lo + (hi - lo) * ((gen() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

// Frozen oracle constants (normalized units, a = 0.01, p_bar = pbar_max(a)).
namespace frozen {
constexpr double pbar_001 = 1.151306225614748;
constexpr double pidle_001 = 0.8685786437626906;
constexpr double x1_star = 0.15130622561474794;   // n=1 boundary attempt rate
constexpr double s1_star = 0.9380061125236215;    // n=1 boundary rate
constexpr double x2_star = 0.07298938746604011;   // n=2 p_bar-constrained
constexpr double X2 = 0.16130622561474794;
constexpr double s2_star = 0.45248958735394784;
constexpr double tau2_turn = 0.09090909090909091;  // n=2 turning point, 1/11
constexpr double x3_star = 0.04808607523368891;    // n=3 symmetric
constexpr double s3_star = 0.2981042737217979;
constexpr double ratio2 = 0.9954770921786862;      // efficiency ratio n=2
constexpr double implied_a_8412 = 0.015124942877464707;
// example1 closed forms (airtime units)
constexpr double ex1_level0 = 0.21666958112034987;
constexpr double ex1_level1 = 0.4429115271402205;
constexpr double ex1_x_left = 0.04417955141660679;
// example2 center WLAN refit
constexpr double ex2_level1_airtime = 0.48140454569953256;
constexpr double ex2_n_mp0 = 1.4500779709204983;
}  // namespace frozen

}  // namespace meshfair::test

#endif
