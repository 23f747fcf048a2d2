#ifndef MESHFAIR_TOPOLOGY_HPP
#define MESHFAIR_TOPOLOGY_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "meshfair/model.hpp"

namespace meshfair {

struct Station {
  std::string id;
  std::vector<std::string> channels;  // radio memberships
  bool mesh_point = false;
};

// One routed hop: station `from` transmits to `to` on `channel`.
struct Hop {
  std::string from;
  std::string to;
  std::string channel;
  double loss_rate = 0.0;  // frame loss on this hop's downstream link, [0,1)
};

struct Flow {
  std::string id;
  std::string source;
  std::vector<Hop> route;
  double phy_rate = 0.0;  // bits/s, 0 = unset; weight in time-based mode
  double l_bits = 1.0;    // payload bits per frame
  double weight = 0.0;    // explicit weight override, 0 = mode default
  double max_rate = 0.0;  // offered-load cap in rate units, 0 = uncapped
  std::map<std::string, double> loss_scaling;  // station -> A_{i,p} >= 1
};

struct MeshTopology {
  std::vector<WlanParams> wlans;
  std::vector<Station> stations;
  std::vector<Flow> flows;

  const WlanParams* wlan(const std::string& channel_id) const;
  const Station* station(const std::string& station_id) const;
  const Flow* flow(const std::string& flow_id) const;
};

struct Violation {
  std::string entity;
  std::string rule;
  std::string message;
  bool warning = false;
};

// Structural checks. Violations are data, not exceptions; warnings do not
// make the topology invalid.
std::vector<Violation> validate(const MeshTopology& topo);
bool valid(const std::vector<Violation>& violations);  // ignores warnings

using StationChannel = std::pair<std::string, std::string>;

struct FlowSets {
  // P_k(c): flows transmitted by station k on channel c, in topology order.
  std::map<StationChannel, std::vector<std::string>> per_station;
  // P(c): all flows relayed on channel c.
  std::map<std::string, std::vector<std::string>> per_channel;
  // Transmitting stations per channel, in topology order.
  std::map<std::string, std::vector<std::string>> transmitters;

  // Max burst size under the one-frame-per-flow discipline: |P_k(c)|.
  int n_bar(const std::string& station, const std::string& channel) const;
};

FlowSets flow_sets(const MeshTopology& topo);

// Goodput scaling A_{i,p} at `station`: explicit map entry if present, else
// the product of 1/(1-loss) over hops strictly downstream of station's hop.
double loss_scaling_at(const Flow& flow, const std::string& station);

}  // namespace meshfair

#endif
