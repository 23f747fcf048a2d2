#ifndef MESHFAIR_WATERFILL_HPP
#define MESHFAIR_WATERFILL_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshfair/fairness.hpp"
#include "meshfair/solver.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

// Raised when a water-filling subproblem cannot be solved; carries the
// solver's certificate.
struct SolveError : std::runtime_error {
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

struct WaterfillOptions {
  FairnessMode mode = FairnessMode::throughput;
  double probe_rel_tol = 1e-5;  // bottleneck detection margin on s(p)/w(p)
  solver::SolverOptions solver;
};

// Solved per-WLAN operating point after the final refit.
struct WlanAllocation {
  std::vector<std::string> stations;  // transmitters, topology order
  std::vector<double> x;
  std::vector<double> n;
  double denominator = 0.0;  // X at the operating point
  double x_bar = 0.0;        // attempt rate of bottlenecked stations
  double y = 0.0;            // chosen design rate: x_bar (max of them in goodput mode)
  double p_bar = 1.0;
  double pidle_target = 1.0;  // 1 / p_bar
};

struct MaxMinResult {
  FairnessMode mode = FairnessMode::throughput;
  std::map<std::string, double> rates;   // flow -> s(p), scenario rate units
  std::vector<double> levels;            // ascending bottleneck levels, s/w units
  std::map<std::string, int> level_index;
  std::map<std::string, std::string> bottleneck;  // flow -> channel ("rate-cap" for
                                                  // offered-load-capped flows)
  std::map<std::string, std::vector<std::string>> tight_channels;  // all tight WLANs
  std::map<std::string, std::vector<std::string>> bottlenecked_flows;  // channel ->
  std::map<std::string, WlanAllocation> wlans;
};

// Water-filling over the mesh rate region: lexicographically max-min
// weighted flow rates. Throws SolveError when no strictly positive
// allocation exists.
MaxMinResult waterfill(const MeshTopology& topo, const WaterfillOptions& opts = {});

// One step of the algorithm: the largest common weighted rate of the active
// flows, with settled flows held at their levels (s/w units, scenario scale).
struct StepOutcome {
  double level = 0.0;
  solver::Solution solution;
};
StepOutcome step_max_common_rate(const MeshTopology& topo, const WaterfillOptions& opts,
                                 const std::vector<std::string>& active,
                                 const std::map<std::string, double>& settled);

// Flows whose weighted rate cannot exceed `level` while the others hold
// theirs: the flows to remove, with their bottleneck assignments.
struct BottleneckScan {
  std::vector<std::string> removed;
  std::map<std::string, std::string> bottleneck;
  std::map<std::string, std::vector<std::string>> tight_channels;
};
// `step` optionally carries the solved step program at this level; the probes
// warm-start from it (it is re-solved internally when absent).
BottleneckScan detect_bottlenecked(const MeshTopology& topo, const WaterfillOptions& opts,
                                   const std::vector<std::string>& active, double level,
                                   const std::map<std::string, double>& settled,
                                   const StepOutcome* step = nullptr);

struct AuditReport {
  std::vector<std::string> violations;
  std::vector<std::string> flags;  // expected oddities, e.g. bottlenecked-unsaturated
                                   // flows under heterogeneous goodput scaling
  bool pass() const { return violations.empty(); }
};

// Structural audit of a completed allocation: (1) bottlenecked stations share
// a common attempt rate x_bar = y(c); (2) bottlenecked flows send exactly one
// frame per transmission opportunity and station aggregates are tight;
// (3) non-bottlenecked flows have strict slack against the design rate.
AuditReport audit_allocation_structure(const MaxMinResult& result, const MeshTopology& topo,
                                       double tol = 1e-6);

struct WlanConfigRow {
  std::string channel;
  double y = 0.0;
  int cw = 2;  // contention window realizing tau_bar = 2/(CW-1)
  double pidle_target = 1.0;
  double p_bar = 1.0;
  std::vector<std::string> stations;
  std::vector<double> x;
  std::vector<double> n;
};

// Per-WLAN runtime configuration consumed by the simulator.
std::vector<WlanConfigRow> configure_network(const MaxMinResult& result);

// CW realizing an attempt probability: CW = 1 + 2/tau, nearest integer >= 2.
int cw_for_tau(double tau_bar);

}  // namespace meshfair

#endif
