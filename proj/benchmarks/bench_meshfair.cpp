#include <benchmark/benchmark.h>

#include "meshfair/model.hpp"
#include "meshfair/rate_region.hpp"
#include "meshfair/scenario.hpp"
#include "meshfair/simulator.hpp"
#include "meshfair/waterfill.hpp"

namespace {

using namespace meshfair;

std::string scenario_path(const char* name) {
  return std::string(MESHFAIR_SCENARIO_DIR) + "/" + name;
}

void BM_Throughput(benchmark::State& state) {
  WlanParams p = WlanParams::make("w", 0.01, 1.0, 1.2);
  WlanOperatingPoint op{{0.05, 0.08, 0.02, 0.04, 0.06}, {1.0, 2.0, 1.0, 3.0, 1.0}};
  for (auto _ : state) {
    double total = 0.0;
    for (std::size_t i = 0; i < op.x.size(); ++i)
      total += station_throughput(i, op, p);
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_Throughput);

void BM_BoundaryAlongRay(benchmark::State& state) {
  RayQuery q;
  int n = int(state.range(0));
  q.direction.assign(n, 1.0 / n);
  q.burst.assign(n, 1.0);
  q.params = WlanParams::make("w", 0.01, 1.0, pbar_max(0.01));
  for (auto _ : state) {
    BoundaryPoint bp = boundary_along_ray(q);
    benchmark::DoNotOptimize(bp.lambda_star);
  }
}
BENCHMARK(BM_BoundaryAlongRay)->Arg(2)->Arg(8)->Arg(32);

void BM_WaterfillExample1(benchmark::State& state) {
  Scenario s = load_scenario(scenario_path("example1.json"));
  WaterfillOptions opts;
  opts.solver.audit_convexity = false;
  for (auto _ : state) {
    MaxMinResult r = waterfill(s.topology, opts);
    benchmark::DoNotOptimize(r.levels.size());
  }
}
BENCHMARK(BM_WaterfillExample1)->Unit(benchmark::kMillisecond);

void BM_SimulatorSlots(benchmark::State& state) {
  Scenario s = load_scenario(scenario_path("example1.json"));
  sim::SimConfig cfg = s.sim;
  cfg.duration = 20.0;
  cfg.window = 10.0;
  for (auto _ : state) {
    sim::SimMeasurement m = sim::run(s.topology, {}, cfg);
    long long slots = 0;
    for (std::size_t c = 0; c < m.channels.size(); ++c)
      slots += m.idle_slots[c] + m.success_slots[c] + m.collision_slots[c];
    state.counters["slots_per_s"] = benchmark::Counter(
        double(slots), benchmark::Counter::kIsIterationInvariantRate);
    benchmark::DoNotOptimize(slots);
  }
}
BENCHMARK(BM_SimulatorSlots)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
