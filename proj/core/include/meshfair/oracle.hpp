#ifndef MESHFAIR_ORACLE_HPP
#define MESHFAIR_ORACLE_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "meshfair/fairness.hpp"
#include "meshfair/topology.hpp"

namespace meshfair::oracle {

struct GridSpec {
  double mesh = 1e-2;          // initial mesh on every x dimension
  double refined_mesh = 1e-3;  // mesh around the incumbent per refinement pass
  int refinements = 1;
  double max_points = 1e8;     // refusal threshold on grid size
};

struct GridAllocation {
  std::map<std::string, double> rates;  // flow -> rate, scenario units
  double objective = 0.0;               // smallest weighted rate (diagnostic)
};

// Brute-force lexicographic max-min over a grid of (x, N) operating points;
// per grid point the allocation is progressive filling on the induced
// polytope. Meant for tiny instances only; throws when the grid exceeds
// max_points.
GridAllocation grid_maxmin(const MeshTopology& topo, FairnessMode mode,
                           const GridSpec& spec = {});

struct SlotDistribution {
  double idle = 1.0;
  std::vector<double> success;  // per station
  double collision = 0.0;
};

// Exact 2^n enumeration of per-slot outcomes, n <= 4.
SlotDistribution enumerate_slot_distribution(std::span<const double> tau);

}  // namespace meshfair::oracle

#endif
