#include "doctest.h"

#include <stdexcept>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meshfair/report.hpp"
#include "meshfair/scenario.hpp"
#include "test_support.hpp"

using namespace meshfair;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("meshfair_test_" + tag);
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("scenario loading") {
  Scenario s = load_scenario(test::scenario_path("example1.json"));
  CHECK(s.name == "example1");
  CHECK(s.topology.wlans.size() == 3);
  CHECK(s.topology.stations.size() == 13);
  CHECK(s.topology.flows.size() == 9);
  CHECK(s.mode == FairnessMode::throughput);
  CHECK(s.sim.duration == 600.0);
  CHECK(s.warmup == 20.0);
  // default p_bar from the idle-probability bound at the implied a
  CHECK(s.topology.wlans[0].p_bar == doctest::Approx(1.0 / 0.8412).epsilon(1e-9));
  CHECK(s.topology.wlans[0].a == doctest::Approx(test::frozen::implied_a_8412).epsilon(1e-9));

  SUBCASE("hash is stable across parses") {
    Scenario t = load_scenario(test::scenario_path("example1.json"));
    CHECK(s.hash == t.hash);
    Scenario other = load_scenario(test::scenario_path("example2.json"));
    CHECK(s.hash != other.hash);
  }
  SUBCASE("round-trips through its own JSON") {
    Scenario t = parse_scenario(scenario_to_json(s));
    CHECK(t.topology.wlans.size() == s.topology.wlans.size());
    CHECK(t.topology.flows.size() == s.topology.flows.size());
    CHECK(t.mode == s.mode);
    CHECK(t.sim.duration == s.sim.duration);
    CHECK(t.topology.flows[3].route.size() == 2);
  }
  SUBCASE("multirate variant selects time mode") {
    Scenario t = load_scenario(test::scenario_path("example1_multirate.json"));
    CHECK(t.mode == FairnessMode::time);
    CHECK(t.topology.flow("flow0")->l_bits == 4000);
    CHECK(t.topology.flow("flow0")->phy_rate == doctest::Approx(5.5e6));
  }
  SUBCASE("pbar overrides") {
    std::string text = slurp(test::scenario_path("example1.json"));
    auto pos = text.find("\"mode\": \"throughput\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"mode\": \"throughput\"").size(),
                 "\"mode\": \"throughput\", \"pbar_overrides\": {\"left\": 1.3}");
    Scenario t = parse_scenario(text);
    CHECK(t.topology.wlan("left")->p_bar == 1.3);
    CHECK(t.topology.wlan("right")->p_bar == doctest::Approx(1.0 / 0.8412));
  }
  SUBCASE("bad inputs raise input errors") {
    CHECK_THROWS_AS(load_scenario("/nonexistent.json"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scenario("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scenario("{\"wlans\": []}"), std::invalid_argument);
  }
}

TEST_CASE("comparison logic") {
  Scenario s = load_scenario(test::scenario_path("example1.json"));
  sim::SimMeasurement m;
  m.window = 10.0;
  m.duration = 40.0;
  std::map<std::string, double> theory;
  for (const auto& f : s.topology.flows) {
    m.flows.push_back(f.id);
    theory[f.id] = 1e6;
  }
  m.delivered_bits.assign(4, std::vector<double>(m.flows.size(), 1e6 * 10.0));

  SUBCASE("simulation equal to theory passes at zero tolerance") {
    auto rep = report::compare(theory, m, 0.0, 15.0);
    CHECK(rep.pass);
    for (const auto& fc : rep.flows) CHECK(fc.rel_err == 0.0);
  }
  SUBCASE("zero tolerance fails on any error") {
    m.delivered_bits[3][0] *= 1.001;
    auto rep = report::compare(theory, m, 0.0, 15.0);
    CHECK(!rep.pass);
  }
  SUBCASE("flow-set mismatch is an input error") {
    theory.erase(theory.begin()->first);
    CHECK_THROWS_AS(report::compare(theory, m, 0.1, 15.0), std::invalid_argument);
  }
}

TEST_CASE("csv round trips") {
  Scenario s = load_scenario(test::scenario_path("example1.json"));
  std::string dir = temp_dir("csv");

  SUBCASE("wlan config survives write and read") {
    std::vector<WlanConfigRow> rows(1);
    rows[0].channel = "left";
    rows[0].y = 0.0441795514166;
    rows[0].cw = 48;
    rows[0].pidle_target = 0.8412;
    rows[0].stations = {"sta0", "sta1"};
    rows[0].x = {0.0441795514166, 0.0441795514166};
    rows[0].n = {1.0, 1.0};
    std::string path = dir + "/wlan_config.csv";
    report::write_wlan_config_csv(path, s, rows);
    auto back = report::read_wlan_config_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].channel == "left");
    CHECK(back[0].cw == 48);
    CHECK(back[0].y == doctest::Approx(rows[0].y).epsilon(1e-15));
    CHECK(back[0].stations == rows[0].stations);
  }
  SUBCASE("headers carry provenance") {
    std::string header = report::csv_header(s, 17);
    CHECK(header.find("meshfair-version=") != std::string::npos);
    CHECK(header.find("scenario-hash=") != std::string::npos);
    CHECK(header.find("seed=17") != std::string::npos);
  }
}

TEST_CASE("cli end to end on a bundled scenario") {
  std::string dir = temp_dir("cli");
  std::string scenario = test::scenario_path("example_lossy.json");

  SUBCASE("solve then simulate then compare") {
    std::vector<const char*> solve_args{"meshfair", "solve", "--scenario", scenario.c_str(),
                                        "--out", dir.c_str()};
    CHECK(cli::run(int(solve_args.size()), solve_args.data()) == 0);
    CHECK(fs::exists(dir + "/allocation.csv"));
    CHECK(fs::exists(dir + "/wlan_config.csv"));

    std::string config = dir + "/wlan_config.csv";
    std::vector<const char*> sim_args{"meshfair", "simulate", "--scenario", scenario.c_str(),
                                      "--out", dir.c_str(), "--config", config.c_str(),
                                      "--duration", "120"};
    CHECK(cli::run(int(sim_args.size()), sim_args.data()) == 0);
    CHECK(fs::exists(dir + "/flows.csv"));
    CHECK(fs::exists(dir + "/wlan.csv"));
    CHECK(fs::exists(dir + "/manifest.json"));
    std::string manifest = slurp(dir + "/manifest.json");
    CHECK(manifest.find("meshfair_version") != std::string::npos);
    CHECK(manifest.find("scenario_hash") != std::string::npos);

    std::string allocation = dir + "/allocation.csv";
    std::string flows = dir + "/flows.csv";
    std::vector<const char*> cmp_args{"meshfair", "compare", "--allocation",
                                      allocation.c_str(), "--flows", flows.c_str(),
                                      "--out", dir.c_str(), "--tolerance", "0.25",
                                      "--warmup", "20"};
    CHECK(cli::run(int(cmp_args.size()), cmp_args.data()) == 0);
    CHECK(fs::exists(dir + "/comparison.csv"));
  }
  SUBCASE("input errors exit with code 2") {
    std::vector<const char*> args{"meshfair", "solve", "--scenario", "/missing.json"};
    CHECK(cli::run(int(args.size()), args.data()) == 2);
  }
  SUBCASE("rate-region emits the efficiency curve") {
    std::vector<const char*> args{"meshfair", "rate-region", "--a", "0.01",
                                  "--n-min", "2", "--n-max", "4", "--out", dir.c_str()};
    CHECK(cli::run(int(args.size()), args.data()) == 0);
    std::string csv = slurp(dir + "/rate_region.csv");
    CHECK(csv.find("n,a,lambda_star,binding,ratio") != std::string::npos);
    CHECK(csv.find("pbar") != std::string::npos);
  }
}
