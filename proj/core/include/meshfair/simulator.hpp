#ifndef MESHFAIR_SIMULATOR_HPP
#define MESHFAIR_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meshfair/topology.hpp"
#include "meshfair/waterfill.hpp"

namespace meshfair::sim {

struct AimdParams {
  double alpha = 4.0;   // CW units
  double beta = 0.25;   // multiplicative decrease fraction
  double period = 1.0;  // seconds between updates
};

// Where each station's attempt probability comes from.
enum class TauSource {
  aimd,      // adapted online from cw_init via idle-sense AIMD
  config_y,  // fixed at the WLAN design rate y(c)
  config_x,  // fixed at the per-station solved x (model-validation runs)
};

struct SimConfig {
  std::uint64_t seed = 1;
  double duration = 600.0;  // simulated seconds
  double window = 10.0;     // measurement window, seconds
  TauSource tau_source = TauSource::aimd;
  AimdParams aimd;
  int queue_capacity = 50;  // per flow per station
  double cw_init = 32.0;
  double cw_floor = 2.0;
  double cw_ceil = 1024.0;
};

struct CwUpdate {
  double time = 0.0;
  std::string station;
  std::string channel;
  double cw_before = 0.0;
  double cw_after = 0.0;
  bool additive = false;  // true: +alpha branch, false: *(1-beta) branch
};

struct WlanWindow {
  double idle_time = 0.0;
  double success_time = 0.0;
  double collision_time = 0.0;
  long idle_slots = 0;
  long slots = 0;
  double cw_time = 0.0;  // integral of station-mean CW over the window

  std::optional<double> pidle() const;  // slot-count ratio
};

struct SimMeasurement {
  std::uint64_t seed = 0;
  double duration = 0.0;
  double window = 0.0;
  std::vector<std::string> flows;
  std::vector<std::string> channels;

  // [window][flow]
  std::vector<std::vector<double>> delivered_bits;
  // [window][flow][channel] airtime seconds spent on the flow's frames
  std::vector<std::vector<std::vector<double>>> airtime;
  // [window][channel]
  std::vector<std::vector<WlanWindow>> wlan;
  std::vector<CwUpdate> cw_updates;

  // conservation accounting, frames
  std::vector<long long> injected;
  std::vector<long long> delivered;
  std::vector<long long> in_queue;  // at end of run, including the source queue

  // whole-run slot counts per channel
  std::vector<long long> idle_slots, success_slots, collision_slots;

  int first_hop_channel(std::size_t flow) const { return first_hop_channel_[flow]; }
  std::vector<int> first_hop_channel_;

  double flow_mbps(std::size_t w, std::size_t f) const;
  double flow_airtime_first_hop(std::size_t w, std::size_t f) const;
};

// Slot-level simulation of the mesh MAC: Bernoulli attempts per MAC slot,
// TXOP bursts of one frame per non-empty flow queue, lossless backpressure
// between hops, per-channel independent clocks, optional AIMD adaptation of
// CW toward the P_idle target. Deterministic for a fixed (scenario, seed).
SimMeasurement run(const MeshTopology& topo, const std::vector<WlanConfigRow>& config,
                   const SimConfig& sim);

// One AIMD update: multiplicative decrease while the channel idles above
// target, additive increase otherwise; clamped and rounded to an integer.
double aimd_step(double cw, double measured_pidle, double pidle_target,
                 const AimdParams& params, double cw_floor = 2.0, double cw_ceil = 1024.0,
                 bool* additive = nullptr);

// Idle probability over a window of MAC slots; absent when no slot elapsed.
std::optional<double> measure_pidle(long idle_slots, long total_slots);

// Frame admission under lossless backpressure: the next-hop queue (or sink)
// must have vacancy.
bool backpressure_admit(int next_hop_occupancy, int queue_capacity, bool next_is_sink);

}  // namespace meshfair::sim

#endif
