#include "doctest.h"

#include <stdexcept>

#include <cmath>

#include "meshfair/oracle.hpp"
#include "meshfair/scenario.hpp"
#include "meshfair/waterfill.hpp"
#include "test_support.hpp"

using namespace meshfair;
namespace frozen = meshfair::test::frozen;

TEST_CASE("symmetric single WLAN hits the closed form") {
  for (int k : {1, 3}) {
    MeshTopology topo = test::single_wlan(k, 1, 0.01, frozen::pbar_001);
    MaxMinResult r = waterfill(topo);
    REQUIRE(r.levels.size() == 1);
    double expect = k == 1 ? frozen::s1_star : frozen::s3_star;
    CHECK(r.levels[0] == doctest::Approx(expect).epsilon(1e-4));
    for (const auto& [flow, rate] : r.rates)
      CHECK(rate == doctest::Approx(expect).epsilon(1e-4));
    AuditReport audit = audit_allocation_structure(r, topo);
    CHECK(audit.pass());
  }
}

TEST_CASE("step and bottleneck detection on a symmetric WLAN") {
  MeshTopology topo = test::single_wlan(3, 1, 0.01, frozen::pbar_001);
  std::vector<std::string> active{"f0_0", "f1_0", "f2_0"};
  StepOutcome step = step_max_common_rate(topo, {}, active, {});
  CHECK(step.level == doctest::Approx(frozen::s3_star).epsilon(1e-4));
  BottleneckScan scan = detect_bottlenecked(topo, {}, active, step.level, {});
  CHECK(scan.removed.size() == 3);  // symmetry removes everyone at once
  for (const auto& f : scan.removed) CHECK(scan.bottleneck.at(f) == "w0");
}

TEST_CASE("single-flow network level equals that flow's max rate") {
  MeshTopology topo = test::single_wlan(1, 1, 0.01, frozen::pbar_001);
  StepOutcome step = step_max_common_rate(topo, {}, {"f0_0"}, {});
  CHECK(step.level == doctest::Approx(frozen::s1_star).epsilon(1e-4));
}

TEST_CASE("example1 reproduces the two-level structure") {
  Scenario s = load_scenario(test::scenario_path("example1.json"));
  MaxMinResult r = waterfill(s.topology);
  REQUIRE(r.levels.size() == 2);

  double l_over_tc = 8000.0 / 0.0013223190435845446;
  CHECK(r.levels[0] == doctest::Approx(frozen::ex1_level0 * l_over_tc).epsilon(1e-4));
  CHECK(r.levels[1] == doctest::Approx(frozen::ex1_level1 * l_over_tc).epsilon(1e-4));

  for (int i = 0; i <= 3; ++i) {
    CHECK(r.level_index.at("flow" + std::to_string(i)) == 0);
    CHECK(r.bottleneck.at("flow" + std::to_string(i)) == "left");
  }
  for (int i = 4; i <= 7; ++i) {
    CHECK(r.level_index.at("flow" + std::to_string(i)) == 0);
    CHECK(r.bottleneck.at("flow" + std::to_string(i)) == "right");
  }
  CHECK(r.level_index.at("flow8") == 1);
  CHECK(r.bottleneck.at("flow8") == "center");

  // operating point: common x on the left WLAN, y = x_bar
  const WlanAllocation& left = r.wlans.at("left");
  CHECK(left.x_bar == doctest::Approx(frozen::ex1_x_left).epsilon(1e-4));
  CHECK(left.y == doctest::Approx(left.x_bar));
  for (double x : left.x) CHECK(x == doctest::Approx(frozen::ex1_x_left).epsilon(1e-4));

  AuditReport audit = audit_allocation_structure(r, s.topology);
  for (const auto& v : audit.violations) MESSAGE(v);
  CHECK(audit.pass());

  SUBCASE("every flow's bottleneck lies on its route") {
    for (const auto& f : s.topology.flows) {
      const std::string& b = r.bottleneck.at(f.id);
      bool on_route = false;
      for (const auto& hop : f.route) on_route |= hop.channel == b;
      CHECK(on_route);
    }
  }
  SUBCASE("deterministic re-solve is bit identical") {
    MaxMinResult r2 = waterfill(s.topology);
    for (const auto& [flow, rate] : r.rates) CHECK(rate == r2.rates.at(flow));
    for (std::size_t i = 0; i < r.levels.size(); ++i) CHECK(r.levels[i] == r2.levels[i]);
  }
}

TEST_CASE("example2: relay burst splits between the two carried flows") {
  Scenario s = load_scenario(test::scenario_path("example2.json"));
  MaxMinResult r = waterfill(s.topology);
  REQUIRE(r.levels.size() == 2);
  double l_over_tc = 8000.0 / 0.0013223190435845446;
  CHECK(r.levels[1] ==
        doctest::Approx(frozen::ex2_level1_airtime * l_over_tc).epsilon(1e-4));
  CHECK(r.bottleneck.at("flow8") == "center");

  const WlanAllocation& center = r.wlans.at("center");
  REQUIRE(center.stations.size() == 2);  // MP0 and MP1 transmit on centre
  for (std::size_t k = 0; k < center.stations.size(); ++k) {
    if (center.stations[k] == "MP0")
      CHECK(center.n[k] == doctest::Approx(frozen::ex2_n_mp0).epsilon(1e-3));
  }
  AuditReport audit = audit_allocation_structure(r, s.topology);
  for (const auto& v : audit.violations) MESSAGE(v);
  CHECK(audit.pass());
}

TEST_CASE("time mode with a single PHY rate matches throughput mode") {
  MeshTopology topo = test::single_wlan(3, 1, 0.015, 1.17);
  for (auto& f : topo.flows) f.phy_rate = 11e6;
  WaterfillOptions tm;
  tm.mode = FairnessMode::time;
  MaxMinResult a = waterfill(topo);
  MaxMinResult b = waterfill(topo, tm);
  for (const auto& [flow, rate] : a.rates)
    CHECK(b.rates.at(flow) == doctest::Approx(rate).epsilon(1e-6));
}

TEST_CASE("levels scale exactly with the frame payload") {
  MeshTopology topo = test::single_wlan(2, 2, 0.01, frozen::pbar_001, 1.0);
  MeshTopology scaled = topo;
  for (auto& f : scaled.flows) f.l_bits *= 1024.0;  // power of two: exact scaling
  MaxMinResult a = waterfill(topo);
  MaxMinResult b = waterfill(scaled);
  for (const auto& [flow, rate] : a.rates) CHECK(b.rates.at(flow) == 1024.0 * rate);
  MeshTopology scaled10 = topo;
  for (auto& f : scaled10.flows) f.l_bits *= 1000.0;
  MaxMinResult c = waterfill(scaled10);
  for (const auto& [flow, rate] : a.rates)
    CHECK(c.rates.at(flow) == doctest::Approx(1000.0 * rate).epsilon(1e-12));
}

TEST_CASE("externally capped flow frees capacity for its peer") {
  MeshTopology topo = test::single_wlan(2, 1, 0.01, frozen::pbar_001);
  topo.flows[0].max_rate = 0.25;  // below the fair split ~0.4525
  MaxMinResult r = waterfill(topo);
  REQUIRE(r.levels.size() == 2);
  CHECK(r.rates.at("f0_0") == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(r.bottleneck.at("f0_0") == "rate-cap");
  CHECK(r.rates.at("f1_0") > frozen::s2_star);

  SUBCASE("grid oracle agrees") {
    oracle::GridSpec spec;
    spec.mesh = 2e-3;
    spec.refined_mesh = 2e-4;
    oracle::GridAllocation g = oracle::grid_maxmin(topo, FairnessMode::throughput, spec);
    for (const auto& [flow, rate] : r.rates)
      CHECK(rate == doctest::Approx(g.rates.at(flow)).epsilon(1e-2));
  }
}

TEST_CASE("goodput mode flags bottlenecked-unsaturated flows") {
  Scenario s = load_scenario(test::scenario_path("example_lossy.json"));
  WaterfillOptions opts;
  opts.mode = s.mode;
  REQUIRE(s.mode == FairnessMode::goodput);
  MaxMinResult r = waterfill(s.topology, opts);
  // equal goodput for all three flows
  REQUIRE(r.levels.size() == 1);
  for (const auto& [flow, rate] : r.rates)
    CHECK(rate == doctest::Approx(r.levels[0]).epsilon(1e-6));
  AuditReport audit = audit_allocation_structure(r, s.topology);
  CHECK(audit.pass());
  CHECK(!audit.flags.empty());  // flow2's station sits below the design rate
}

TEST_CASE("contention-window mapping") {
  CHECK(cw_for_tau(0.0625) == 33);
  CHECK(cw_for_tau(0.045879) == 45);
  double tau3 = frozen::x3_star / (1.0 + frozen::x3_star);
  CHECK(cw_for_tau(tau3) == 45);

  MeshTopology topo = test::single_wlan(3, 1, 0.01, frozen::pbar_001);
  MaxMinResult r = waterfill(topo);
  auto rows = configure_network(r);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].cw == 45);
  CHECK(rows[0].pidle_target == doctest::Approx(frozen::pidle_001).epsilon(1e-9));
  CHECK(rows[0].y == doctest::Approx(frozen::x3_star).epsilon(1e-4));
}

TEST_CASE("infeasible topology raises with a certificate") {
  MeshTopology topo = test::single_wlan(1, 1, 0.01, frozen::pbar_001);
  topo.flows[0].route[0].channel = "nowhere";
  CHECK_THROWS_AS(waterfill(topo), std::invalid_argument);
}
