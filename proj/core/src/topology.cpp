#include "meshfair/topology.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace meshfair {

namespace {

template <typename Seq, typename Pred>
auto find_by(const Seq& seq, Pred pred) -> decltype(&seq.front()) {
  for (const auto& e : seq)
    if (pred(e)) return &e;
  return nullptr;
}

}  // namespace

const WlanParams* MeshTopology::wlan(const std::string& channel_id) const {
  return find_by(wlans, [&](const WlanParams& w) { return w.channel_id == channel_id; });
}

const Station* MeshTopology::station(const std::string& station_id) const {
  return find_by(stations, [&](const Station& s) { return s.id == station_id; });
}

const Flow* MeshTopology::flow(const std::string& flow_id) const {
  return find_by(flows, [&](const Flow& f) { return f.id == flow_id; });
}

std::vector<Violation> validate(const MeshTopology& topo) {
  std::vector<Violation> out;
  auto violation = [&](const std::string& entity, const std::string& rule,
                       const std::string& msg, bool warning = false) {
    out.push_back({entity, rule, msg, warning});
  };

  std::set<std::string> wlan_ids;
  for (const auto& w : topo.wlans) {
    if (!wlan_ids.insert(w.channel_id).second)
      violation(w.channel_id, "duplicate-channel", "channel id appears twice");
    try {
      w.check();
    } catch (const std::exception& e) {
      violation(w.channel_id, "bad-params", e.what());
    }
  }

  std::set<std::string> station_ids;
  for (const auto& s : topo.stations) {
    if (!station_ids.insert(s.id).second)
      violation(s.id, "duplicate-station", "station id appears twice");
    std::set<std::string> seen;
    for (const auto& c : s.channels) {
      if (!seen.insert(c).second)
        violation(s.id, "duplicate-membership", "station lists channel " + c + " twice");
      if (!topo.wlan(c))
        violation(s.id, "unknown-channel", "station references unknown channel " + c);
    }
  }

  for (const auto& w : topo.wlans) {
    int members = 0;
    for (const auto& s : topo.stations)
      members += std::count(s.channels.begin(), s.channels.end(), w.channel_id);
    if (members < 1)
      violation(w.channel_id, "empty-wlan", "channel has no member stations");
  }

  std::set<std::string> flow_ids;
  for (const auto& f : topo.flows) {
    if (!flow_ids.insert(f.id).second)
      violation(f.id, "duplicate-flow", "flow id appears twice");
    if (f.l_bits <= 0.0) violation(f.id, "bad-l-bits", "l_bits must be > 0");
    if (f.weight < 0.0) violation(f.id, "bad-weight", "weight must be positive");
    if (f.max_rate < 0.0) violation(f.id, "bad-max-rate", "max_rate must be >= 0");
    if (f.route.empty()) {
      violation(f.id, "empty-route", "flow has no hops");
      continue;
    }
    if (f.route.front().from != f.source)
      violation(f.id, "source-mismatch", "first hop does not start at the source");

    const Station* src = topo.station(f.source);
    if (!src)
      violation(f.id, "unknown-station", "source " + f.source + " not defined");
    else if (src->mesh_point)
      violation(f.id, "mesh-point-source", "flow originates at a mesh point", /*warning=*/true);

    std::set<StationChannel> transmitters_seen;
    for (std::size_t h = 0; h < f.route.size(); ++h) {
      const Hop& hop = f.route[h];
      std::ostringstream where;
      where << f.id << "/hop" << h;
      const Station* from = topo.station(hop.from);
      const Station* to = topo.station(hop.to);
      if (!from || !to) {
        violation(where.str(), "unknown-station", "hop references an undefined station");
        continue;
      }
      auto on_channel = [&](const Station& s) {
        return std::count(s.channels.begin(), s.channels.end(), hop.channel) > 0;
      };
      if (!topo.wlan(hop.channel))
        violation(where.str(), "unknown-channel", "hop uses undefined channel " + hop.channel);
      else if (!on_channel(*from) || !on_channel(*to))
        violation(where.str(), "broken chain",
                  hop.from + "->" + hop.to + " not both members of " + hop.channel);
      if (h > 0 && f.route[h - 1].to != hop.from)
        violation(where.str(), "broken chain", "hop does not continue from previous receiver");
      if (!transmitters_seen.insert({hop.from, hop.channel}).second)
        violation(where.str(), "loop", "transmitter repeats (station,channel) on the route");
      if (hop.loss_rate < 0.0 || hop.loss_rate >= 1.0)
        violation(where.str(), "bad-loss-rate", "loss_rate must be in [0,1)");
    }
    for (const auto& [station, scaling] : f.loss_scaling) {
      if (scaling < 1.0)
        violation(f.id, "bad-loss-scaling", "A_{i,p} must be >= 1 at " + station);
      if (!topo.station(station))
        violation(f.id, "bad-loss-scaling", "loss_scaling names unknown station " + station);
    }
  }
  return out;
}

bool valid(const std::vector<Violation>& violations) {
  return std::none_of(violations.begin(), violations.end(),
                      [](const Violation& v) { return !v.warning; });
}

FlowSets flow_sets(const MeshTopology& topo) {
  FlowSets fs;
  for (const auto& f : topo.flows) {
    for (const auto& hop : f.route) {
      fs.per_station[{hop.from, hop.channel}].push_back(f.id);
      auto& pc = fs.per_channel[hop.channel];
      if (std::find(pc.begin(), pc.end(), f.id) == pc.end()) pc.push_back(f.id);
      auto& tx = fs.transmitters[hop.channel];
      if (std::find(tx.begin(), tx.end(), hop.from) == tx.end()) tx.push_back(hop.from);
    }
  }
  // Normalize transmitter order to topology station order.
  for (auto& [channel, tx] : fs.transmitters) {
    std::vector<std::string> ordered;
    for (const auto& s : topo.stations)
      if (std::find(tx.begin(), tx.end(), s.id) != tx.end()) ordered.push_back(s.id);
    tx = std::move(ordered);
  }
  return fs;
}

int FlowSets::n_bar(const std::string& station, const std::string& channel) const {
  auto it = per_station.find({station, channel});
  return it == per_station.end() ? 0 : static_cast<int>(it->second.size());
}

double loss_scaling_at(const Flow& flow, const std::string& station) {
  auto it = flow.loss_scaling.find(station);
  if (it != flow.loss_scaling.end()) return it->second;
  // Losses on the station's own hop and on every later hop inflate the
  // send rate needed for the goodput to survive to the destination.
  double scaling = 1.0;
  bool from_here = false;
  for (const auto& hop : flow.route) {
    if (hop.from == station) from_here = true;
    if (from_here) scaling /= 1.0 - hop.loss_rate;
  }
  return scaling;
}

}  // namespace meshfair
