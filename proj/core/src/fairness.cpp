#include "meshfair/fairness.hpp"

#include <stdexcept>

namespace meshfair {

FairnessMode fairness_mode_from_string(const std::string& s) {
  if (s == "throughput") return FairnessMode::throughput;
  if (s == "time") return FairnessMode::time;
  if (s == "goodput") return FairnessMode::goodput;
  throw std::invalid_argument("unknown fairness mode: " + s);
}

std::string to_string(FairnessMode mode) {
  switch (mode) {
    case FairnessMode::throughput: return "throughput";
    case FairnessMode::time: return "time";
    case FairnessMode::goodput: return "goodput";
  }
  return "?";
}

double flow_weight(const Flow& flow, FairnessMode mode) {
  if (flow.weight > 0.0) return flow.weight;
  if (mode == FairnessMode::time) {
    if (flow.phy_rate <= 0.0)
      throw std::invalid_argument("time mode requires phy_rate on flow " + flow.id);
    return flow.phy_rate;
  }
  return 1.0;
}

double send_scaling(const Flow& flow, const std::string& station, FairnessMode mode) {
  if (mode != FairnessMode::goodput) return 1.0;
  return loss_scaling_at(flow, station);
}

}  // namespace meshfair
