#ifndef MESHFAIR_SCENARIO_HPP
#define MESHFAIR_SCENARIO_HPP

#include <cstdint>
#include <string>

#include "meshfair/fairness.hpp"
#include "meshfair/simulator.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

// A scenario file: topology plus solver and simulation options.
struct Scenario {
  std::string name;
  MeshTopology topology;
  FairnessMode mode = FairnessMode::throughput;
  sim::SimConfig sim;
  double warmup = 20.0;       // seconds excluded from long-run statistics
  std::uint64_t hash = 0;     // FNV-1a of the canonical JSON
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& s);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace meshfair

#endif
