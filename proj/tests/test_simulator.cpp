#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "meshfair/oracle.hpp"
#include "meshfair/scenario.hpp"
#include "meshfair/simulator.hpp"
#include "test_support.hpp"

using namespace meshfair;
using namespace meshfair::sim;
namespace frozen = meshfair::test::frozen;

namespace {

// Fixed-x runtime config for a single-WLAN topology.
std::vector<WlanConfigRow> fixed_x_config(const MeshTopology& topo, double x, double n) {
  WlanConfigRow row;
  row.channel = topo.wlans[0].channel_id;
  row.y = x;
  row.cw = cw_for_tau(x / (1.0 + x));
  row.pidle_target = 1.0 / topo.wlans[0].p_bar;
  FlowSets fs = flow_sets(topo);
  for (const auto& st : fs.transmitters.at(row.channel)) {
    row.stations.push_back(st);
    row.x.push_back(x);
    row.n.push_back(n);
  }
  return {row};
}

SimConfig fixed_tau_run(double duration, std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.duration = duration;
  cfg.window = duration / 10.0;
  cfg.tau_source = TauSource::config_x;
  return cfg;
}

}  // namespace

TEST_CASE("aimd update") {
  AimdParams p;  // alpha 4, beta 0.25
  bool additive = false;
  SUBCASE("idling above target gets more aggressive") {
    CHECK(aimd_step(32.0, 0.9, 0.8686, p, 2, 1024, &additive) == 24.0);
    CHECK(!additive);
  }
  SUBCASE("busy below target backs off additively") {
    CHECK(aimd_step(36.0, 0.8, 0.8686, p, 2, 1024, &additive) == 40.0);
    CHECK(additive);
  }
  SUBCASE("exactly on target takes the else branch") {
    CHECK(aimd_step(32.0, 0.8686, 0.8686, p, 2, 1024, &additive) == 36.0);
    CHECK(additive);
  }
  SUBCASE("clamped to the floor and ceiling") {
    CHECK(aimd_step(2.0, 0.99, 0.8, p) == 2.0);
    CHECK(aimd_step(1024.0, 0.1, 0.8, p) == 1024.0);
  }
}

TEST_CASE("pidle measurement") {
  CHECK(*measure_pidle(100, 100) == 1.0);
  CHECK(*measure_pidle(50, 100) == 0.5);
  CHECK(!measure_pidle(0, 0).has_value());
}

TEST_CASE("backpressure admission") {
  CHECK(backpressure_admit(0, 50, false));
  CHECK(backpressure_admit(49, 50, false));
  CHECK(!backpressure_admit(50, 50, false));
  CHECK(backpressure_admit(50, 50, true));  // sinks always absorb
}

TEST_CASE("fixed-tau single station matches the n=1 closed form") {
  MeshTopology topo = test::single_wlan(1, 1, 0.01, 10.0);
  double x = 0.25;
  SimConfig cfg = fixed_tau_run(2.5e5, 42);
  SimMeasurement m = run(topo, fixed_x_config(topo, x, 1.0), cfg);
  long long slots = m.idle_slots[0] + m.success_slots[0] + m.collision_slots[0];
  CHECK(slots > 1000000);
  double expect = x / (0.01 + x);  // l_bits = t_c = 1
  double measured =
      std::accumulate(m.delivered_bits.begin(), m.delivered_bits.end(), 0.0,
                      [](double acc, const std::vector<double>& w) { return acc + w[0]; }) /
      cfg.duration;
  CHECK(measured == doctest::Approx(expect).epsilon(0.01));
  CHECK(m.collision_slots[0] == 0);  // a lone station cannot collide
}

TEST_CASE("fixed-tau pair matches the analytic idle probability") {
  MeshTopology topo = test::single_wlan(2, 1, 0.01, 10.0);
  double x = tau_to_x(0.2);
  SimConfig cfg = fixed_tau_run(2.5e5, 7);
  SimMeasurement m = run(topo, fixed_x_config(topo, x, 1.0), cfg);
  long long slots = m.idle_slots[0] + m.success_slots[0] + m.collision_slots[0];
  double pidle = double(m.idle_slots[0]) / double(slots);
  CHECK(std::abs(pidle - 0.8 * 0.8) < 0.005);
}

TEST_CASE("slot sampler passes a chi-square test against the enumeration") {
  MeshTopology topo = test::single_wlan(3, 1, 0.01, 10.0);
  std::vector<double> tau{0.1, 0.2, 0.3};
  WlanConfigRow row;
  row.channel = "w0";
  row.y = 1.0;
  row.pidle_target = 0.5;
  for (std::size_t k = 0; k < 3; ++k) {
    row.stations.push_back("sta" + std::to_string(k));
    row.x.push_back(tau_to_x(tau[k]));
    row.n.push_back(1.0);
  }
  SimConfig cfg = fixed_tau_run(2.3e5, 11);
  SimMeasurement m = run(topo, {row}, cfg);

  // observed categories: idle, success per station, collision
  long long slots = m.idle_slots[0] + m.success_slots[0] + m.collision_slots[0];
  CHECK(slots >= 1000000);
  oracle::SlotDistribution d = oracle::enumerate_slot_distribution(tau);
  std::vector<double> expected{d.idle * slots, d.success[0] * slots, d.success[1] * slots,
                               d.success[2] * slots, d.collision * slots};
  std::vector<double> observed{double(m.idle_slots[0]), double(m.delivered[0]),
                               double(m.delivered[1]), double(m.delivered[2]),
                               double(m.collision_slots[0])};
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i)
    chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  CHECK(chi2 < 13.277);  // df = 4 at 1% significance
}

TEST_CASE("no offered load means a fully idle channel") {
  MeshTopology topo = test::single_wlan(1, 1, 0.01, 10.0);
  topo.flows.clear();
  SimConfig cfg;
  cfg.duration = 10.0;
  cfg.window = 1.0;
  cfg.tau_source = TauSource::config_x;
  SimMeasurement m = run(topo, {}, cfg);
  for (const auto& windows : m.wlan) {
    REQUIRE(windows[0].pidle().has_value());
    CHECK(*windows[0].pidle() == 1.0);
  }
}

TEST_CASE("per-window time fractions account for every second") {
  MeshTopology topo = test::single_wlan(3, 2, 0.01, 10.0);
  SimConfig cfg = fixed_tau_run(2000.0, 3);
  cfg.window = 200.0;
  SimMeasurement m = run(topo, fixed_x_config(topo, 0.2, 2.0), cfg);
  for (std::size_t w = 0; w + 1 < m.wlan.size(); ++w) {  // last window may truncate
    const auto& ww = m.wlan[w][0];
    CHECK(ww.idle_time + ww.success_time + ww.collision_time ==
          doctest::Approx(cfg.window).epsilon(1e-12));
  }
}

TEST_CASE("packet conservation is exact") {
  Scenario s = load_scenario(test::scenario_path("example2.json"));
  SimConfig cfg = s.sim;
  cfg.duration = 30.0;
  cfg.window = 5.0;
  SimMeasurement m = run(s.topology, {}, cfg);
  for (std::size_t f = 0; f < m.flows.size(); ++f)
    CHECK(m.injected[f] == m.delivered[f] + m.in_queue[f]);
}

TEST_CASE("backpressure throttles a fast first hop") {
  // src alone on channel A, relaying through a 3-way contended channel B.
  MeshTopology topo;
  topo.wlans.push_back(WlanParams::make("A", 0.01, 1.0, 10.0));
  topo.wlans.push_back(WlanParams::make("B", 0.01, 1.0, 10.0));
  topo.stations = {{"src", {"A"}, false},
                   {"relay", {"A", "B"}, true},
                   {"c1", {"B"}, false},
                   {"c2", {"B"}, false},
                   {"dst", {"B"}, true}};
  Flow through;
  through.id = "through";
  through.source = "src";
  through.l_bits = 1.0;
  through.route = {{"src", "relay", "A"}, {"relay", "dst", "B"}};
  topo.flows.push_back(through);
  for (int k = 1; k <= 2; ++k) {
    Flow f;
    f.id = "local" + std::to_string(k);
    f.source = "c" + std::to_string(k);
    f.l_bits = 1.0;
    f.route = {{f.source, "dst", "B"}};
    topo.flows.push_back(f);
  }
  // All three stations on B at the symmetric boundary; src attempts briskly.
  double xb = frozen::x3_star;
  WlanConfigRow rowA{"A", 0.5, cw_for_tau(x_to_tau(0.5)), 0.9, 10.0, {"src"}, {0.5}, {1.0}};
  WlanConfigRow rowB{"B",
                     xb,
                     cw_for_tau(x_to_tau(xb)),
                     frozen::pidle_001,
                     frozen::pbar_001,
                     {"relay", "c1", "c2"},
                     {xb, xb, xb},
                     {1.0, 1.0, 1.0}};
  SimConfig cfg = fixed_tau_run(2e5, 5);
  cfg.queue_capacity = 50;
  SimMeasurement m = run(topo, {rowA, rowB}, cfg);

  double through_rate =
      std::accumulate(m.delivered_bits.begin(), m.delivered_bits.end(), 0.0,
                      [](double acc, const std::vector<double>& w) { return acc + w[0]; }) /
      cfg.duration;
  // hop 2 sets the pace: the relay behaves as a saturated member of B
  CHECK(through_rate == doctest::Approx(frozen::s3_star).epsilon(0.02));
  for (std::size_t f = 0; f < m.flows.size(); ++f)
    CHECK(m.injected[f] == m.delivered[f] + m.in_queue[f]);

  SUBCASE("a capacity-1 queue stays lossless") {
    SimConfig tiny = cfg;
    tiny.duration = 2e4;
    tiny.queue_capacity = 1;
    SimMeasurement m1 = run(topo, {rowA, rowB}, tiny);
    for (std::size_t f = 0; f < m1.flows.size(); ++f)
      CHECK(m1.injected[f] == m1.delivered[f] + m1.in_queue[f]);
    CHECK(m1.delivered[0] > 0);
  }
}

TEST_CASE("burst size follows the non-empty queues") {
  // one station, two saturated flows: every win sends exactly two frames
  MeshTopology topo = test::single_wlan(1, 2, 0.01, 10.0);
  SimConfig cfg = fixed_tau_run(5e4, 9);
  SimMeasurement m = run(topo, fixed_x_config(topo, 0.25, 2.0), cfg);
  double frames = double(m.delivered[0] + m.delivered[1]);
  CHECK(frames / double(m.success_slots[0]) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("deterministic for a fixed seed") {
  Scenario s = load_scenario(test::scenario_path("example1.json"));
  SimConfig cfg = s.sim;
  cfg.duration = 25.0;
  cfg.window = 5.0;
  SimMeasurement a = run(s.topology, {}, cfg);
  SimMeasurement b = run(s.topology, {}, cfg);
  CHECK(a.delivered == b.delivered);
  CHECK(a.injected == b.injected);
  REQUIRE(a.cw_updates.size() == b.cw_updates.size());
  for (std::size_t i = 0; i < a.cw_updates.size(); ++i) {
    CHECK(a.cw_updates[i].cw_after == b.cw_updates[i].cw_after);
    CHECK(a.cw_updates[i].time == b.cw_updates[i].time);
  }
  for (std::size_t w = 0; w < a.wlan.size(); ++w)
    for (std::size_t c = 0; c < a.channels.size(); ++c)
      CHECK(a.wlan[w][c].idle_slots == b.wlan[w][c].idle_slots);
  SimConfig other = cfg;
  other.seed = cfg.seed + 1;
  SimMeasurement d = run(s.topology, {}, other);
  CHECK(a.delivered != d.delivered);
}

TEST_CASE("aimd drives the idle probability into the target band") {
  // example-scale timing so each AIMD period spans thousands of slots
  MeshTopology topo = test::single_wlan(4, 1, frozen::implied_a_8412, 1.0 / 0.8412,
                                        8000.0, 0.0013223190435845446);
  SimConfig cfg;
  cfg.seed = 2;
  cfg.duration = 150.0;
  cfg.window = 10.0;
  cfg.tau_source = TauSource::aimd;
  SimMeasurement m = run(topo, {}, cfg);
  for (std::size_t w = 7; w < m.wlan.size(); ++w) {  // after 70 s
    auto pidle = m.wlan[w][0].pidle();
    REQUIRE(pidle.has_value());
    CHECK(*pidle > 0.8412 - 0.05);
    CHECK(*pidle < 0.8412 + 0.05);
  }
  // sawtooth: additive runs punctuated by multiplicative drops
  int additive = 0, multiplicative = 0;
  for (const auto& u : m.cw_updates)
    if (u.time > 70.0 && u.station == "sta0") (u.additive ? additive : multiplicative)++;
  CHECK(additive >= 5);
  CHECK(multiplicative >= 2);
  CHECK(additive > multiplicative);
}
