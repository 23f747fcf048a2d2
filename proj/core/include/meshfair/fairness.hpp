#ifndef MESHFAIR_FAIRNESS_HPP
#define MESHFAIR_FAIRNESS_HPP

#include <string>

#include "meshfair/topology.hpp"

namespace meshfair {

// throughput: max-min on s(p).  time: weighted by PHY rate, equalizing
// airtime.  goodput: like throughput but station send rates are inflated by
// the downstream loss scaling A_{i,p}.
enum class FairnessMode { throughput, time, goodput };

FairnessMode fairness_mode_from_string(const std::string& s);
std::string to_string(FairnessMode mode);

// w(p): explicit weight wins; otherwise 1, or the PHY rate in time mode.
double flow_weight(const Flow& flow, FairnessMode mode);

// A_{i,p} as used by the solver: 1 except in goodput mode.
double send_scaling(const Flow& flow, const std::string& station, FairnessMode mode);

}  // namespace meshfair

#endif
