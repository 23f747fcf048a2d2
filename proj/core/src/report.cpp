#include "meshfair/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "meshfair/oracle.hpp"
#include "meshfair/rate_region.hpp"
#include "meshfair/version.hpp"

namespace meshfair::report {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// Rows of a CSV file, comments and header skipped.
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

std::string csv_header(const Scenario& s, std::uint64_t seed) {
  std::ostringstream os;
  os << "# meshfair-version=" << MESHFAIR_VERSION << ", scenario-hash=" << std::hex << s.hash
     << std::dec << ", seed=" << seed << "\n";
  return os.str();
}

void write_allocation_csv(const std::string& path, const Scenario& s,
                          const MaxMinResult& result) {
  auto out = open_out(path);
  out << csv_header(s, s.sim.seed);
  out << "flow,rate,airtime,bottleneck,level_index\n";
  for (const auto& f : s.topology.flows) {
    const Hop& first = f.route.front();
    const WlanParams* w = s.topology.wlan(first.channel);
    double rate = result.rates.at(f.id);
    double airtime = send_scaling(f, first.from, result.mode) * rate * w->t_c / f.l_bits;
    out << f.id << ',' << fmt(rate) << ',' << fmt(airtime) << ','
        << result.bottleneck.at(f.id) << ',' << result.level_index.at(f.id) << "\n";
  }
}

void write_wlan_config_csv(const std::string& path, const Scenario& s,
                           const std::vector<WlanConfigRow>& rows) {
  auto out = open_out(path);
  out << csv_header(s, s.sim.seed);
  out << "channel,y,cw,pidle_target,station,x,n\n";
  for (const auto& row : rows)
    for (std::size_t k = 0; k < row.stations.size(); ++k)
      out << row.channel << ',' << fmt(row.y) << ',' << row.cw << ','
          << fmt(row.pidle_target) << ',' << row.stations[k] << ',' << fmt(row.x[k]) << ','
          << fmt(row.n[k]) << "\n";
}

std::vector<WlanConfigRow> read_wlan_config_csv(const std::string& path) {
  std::vector<WlanConfigRow> rows;
  for (const auto& fields : read_csv(path)) {
    if (fields.size() < 7) throw std::invalid_argument("wlan_config: short row in " + path);
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const WlanConfigRow& r) { return r.channel == fields[0]; });
    if (it == rows.end()) {
      WlanConfigRow row;
      row.channel = fields[0];
      row.y = std::stod(fields[1]);
      row.cw = std::stoi(fields[2]);
      row.pidle_target = std::stod(fields[3]);
      rows.push_back(std::move(row));
      it = rows.end() - 1;
    }
    it->stations.push_back(fields[4]);
    it->x.push_back(std::stod(fields[5]));
    it->n.push_back(std::stod(fields[6]));
  }
  return rows;
}

void write_flows_csv(const std::string& path, const Scenario& s,
                     const sim::SimMeasurement& m) {
  auto out = open_out(path);
  out << csv_header(s, m.seed);
  out << "window_start,flow,mbps,airtime\n";
  for (std::size_t w = 0; w < m.delivered_bits.size(); ++w)
    for (std::size_t f = 0; f < m.flows.size(); ++f)
      out << fmt(w * m.window) << ',' << m.flows[f] << ',' << fmt(m.flow_mbps(w, f)) << ','
          << fmt(m.flow_airtime_first_hop(w, f)) << "\n";
}

void write_wlan_csv(const std::string& path, const Scenario& s,
                    const sim::SimMeasurement& m) {
  auto out = open_out(path);
  out << csv_header(s, m.seed);
  out << "window_start,channel,pidle,mean_cw\n";
  for (std::size_t w = 0; w < m.wlan.size(); ++w)
    for (std::size_t c = 0; c < m.channels.size(); ++c) {
      const auto& ww = m.wlan[w][c];
      if (ww.slots == 0) continue;
      double window_time = ww.idle_time + ww.success_time + ww.collision_time;
      out << fmt(w * m.window) << ',' << m.channels[c] << ',' << fmt(*ww.pidle()) << ','
          << fmt(window_time > 0 ? ww.cw_time / window_time : 0.0) << "\n";
    }
}

void write_station_trace_csv(const std::string& path, const Scenario& s,
                             const sim::SimMeasurement& m) {
  auto out = open_out(path);
  out << csv_header(s, m.seed);
  out << "time,station,channel,cw_before,cw_after,branch\n";
  for (const auto& u : m.cw_updates)
    out << fmt(u.time) << ',' << u.station << ',' << u.channel << ',' << fmt(u.cw_before)
        << ',' << fmt(u.cw_after) << ',' << (u.additive ? "additive" : "multiplicative")
        << "\n";
}

void write_manifest(const std::string& path, const Scenario& s,
                    const std::vector<sim::SimMeasurement>& runs) {
  nlohmann::json j;
  j["meshfair_version"] = MESHFAIR_VERSION;
  j["scenario"] = s.name;
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.hash));
  j["scenario_hash"] = hash;
  for (const auto& m : runs) {
    nlohmann::json r;
    r["seed"] = m.seed;
    r["duration_s"] = m.duration;
    for (std::size_t c = 0; c < m.channels.size(); ++c)
      r["slots"][m.channels[c]] = {{"idle", m.idle_slots[c]},
                                   {"success", m.success_slots[c]},
                                   {"collision", m.collision_slots[c]}};
    j["runs"].push_back(r);
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

ComparisonReport compare(const std::map<std::string, double>& theory_rates,
                         const sim::SimMeasurement& m, double tolerance, double warmup) {
  ComparisonReport report;
  report.tolerance = tolerance;
  if (theory_rates.size() != m.flows.size())
    throw std::invalid_argument("compare: flow sets differ between theory and simulation");
  for (std::size_t f = 0; f < m.flows.size(); ++f) {
    if (!theory_rates.count(m.flows[f]))
      throw std::invalid_argument("compare: simulation flow " + m.flows[f] +
                                  " missing from allocation");
    double bits = 0.0;
    double time = 0.0;
    for (std::size_t w = 0; w < m.delivered_bits.size(); ++w) {
      if (w * m.window < warmup) continue;
      bits += m.delivered_bits[w][f];
      time += m.window;
    }
    if (time <= 0.0) throw std::invalid_argument("compare: no windows past warm-up");
    FlowComparison fc;
    fc.flow = m.flows[f];
    fc.theory = theory_rates.at(m.flows[f]);
    fc.sim_mean = bits / time;
    fc.rel_err = std::abs(fc.sim_mean - fc.theory) / std::max(fc.theory, 1e-300);
    fc.pass = fc.rel_err <= tolerance;
    report.pass = report.pass && fc.pass;
    report.flows.push_back(fc);
  }
  return report;
}

ComparisonReport compare_files(const std::string& allocation_csv,
                               const std::string& flows_csv, double tolerance,
                               double warmup) {
  std::map<std::string, double> theory;
  for (const auto& row : read_csv(allocation_csv)) {
    if (row.size() < 2) throw std::invalid_argument("allocation: short row");
    theory[row[0]] = std::stod(row[1]);
  }
  // window series per flow
  std::map<std::string, std::pair<double, long>> sums;  // flow -> (sum mbps, count)
  std::set<std::string> flows_seen;
  for (const auto& row : read_csv(flows_csv)) {
    if (row.size() < 3) throw std::invalid_argument("flows: short row");
    flows_seen.insert(row[1]);
    if (std::stod(row[0]) < warmup) continue;
    auto& acc = sums[row[1]];
    acc.first += std::stod(row[2]);
    acc.second += 1;
  }
  if (flows_seen.size() != theory.size())
    throw std::invalid_argument("compare: flow sets differ between the two files");
  ComparisonReport report;
  report.tolerance = tolerance;
  for (const auto& [flow, theory_rate] : theory) {
    if (!sums.count(flow) || sums[flow].second == 0)
      throw std::invalid_argument("compare: no post-warmup windows for flow " + flow);
    FlowComparison fc;
    fc.flow = flow;
    fc.theory = theory_rate;
    fc.sim_mean = sums[flow].first / double(sums[flow].second) * 1e6;
    fc.rel_err = std::abs(fc.sim_mean - fc.theory) / std::max(fc.theory, 1e-300);
    fc.pass = fc.rel_err <= tolerance;
    report.pass = report.pass && fc.pass;
    report.flows.push_back(fc);
  }
  return report;
}

void write_comparison_csv(const std::string& path, const ComparisonReport& report) {
  auto out = open_out(path);
  out << "flow,theory,sim_mean,rel_err,pass\n";
  for (const auto& fc : report.flows)
    out << fc.flow << ',' << fmt(fc.theory) << ',' << fmt(fc.sim_mean) << ','
        << fmt(fc.rel_err) << ',' << (fc.pass ? 1 : 0) << "\n";
}

void write_wlan_flow_hist_csv(const std::string& path, const Scenario& s,
                              const sim::SimMeasurement& m, double warmup) {
  FlowSets fs = flow_sets(s.topology);
  auto out = open_out(path);
  out << csv_header(s, m.seed);
  out << "channel,flow,mean_mbps\n";
  for (const auto& [channel, flows] : fs.per_channel)
    for (const auto& flow : flows) {
      auto f = std::find(m.flows.begin(), m.flows.end(), flow) - m.flows.begin();
      double bits = 0.0, time = 0.0;
      for (std::size_t w = 0; w < m.delivered_bits.size(); ++w) {
        if (w * m.window < warmup) continue;
        bits += m.delivered_bits[w][std::size_t(f)];
        time += m.window;
      }
      out << channel << ',' << flow << ',' << fmt(bits / time / 1e6) << "\n";
    }
}

void write_time_alloc_csv(const std::string& path, const Scenario& s,
                          const MaxMinResult& result, const sim::SimMeasurement& m,
                          double warmup) {
  auto out = open_out(path);
  out << csv_header(s, m.seed);
  out << "flow,theory_mbps,sim_mbps,theory_airtime,sim_airtime\n";
  for (std::size_t f = 0; f < m.flows.size(); ++f) {
    const Flow* flow = s.topology.flow(m.flows[f]);
    const Hop& first = flow->route.front();
    const WlanParams* w = s.topology.wlan(first.channel);
    double rate = result.rates.at(flow->id);
    double theory_air =
        send_scaling(*flow, first.from, result.mode) * rate * w->t_c / flow->l_bits;
    double bits = 0.0, air = 0.0, time = 0.0;
    for (std::size_t wi = 0; wi < m.delivered_bits.size(); ++wi) {
      if (wi * m.window < warmup) continue;
      bits += m.delivered_bits[wi][f];
      air += m.airtime[wi][f][m.first_hop_channel(f)];
      time += m.window;
    }
    out << flow->id << ',' << fmt(rate / 1e6) << ',' << fmt(bits / time / 1e6) << ','
        << fmt(theory_air) << ',' << fmt(air / time) << "\n";
  }
}

void write_efficiency_curve_csv(const std::string& path, double a, int n_min, int n_max) {
  auto out = open_out(path);
  out << "# meshfair-version=" << MESHFAIR_VERSION << "\n";
  out << "n,a,lambda_star,binding,ratio\n";
  for (int n = n_min; n <= n_max; ++n) {
    RayQuery q;
    q.direction.assign(n, 1.0 / n);
    q.burst.assign(n, 1.0);
    q.params = WlanParams::make("ray", a, 1.0, pbar_max(a));
    BoundaryPoint bp = boundary_along_ray(q);
    out << n << ',' << fmt(a) << ',' << fmt(bp.lambda_star) << ','
        << (bp.binding == BoundaryBinding::pbar_constraint ? "pbar" : "turning_point") << ','
        << fmt(efficiency_ratio(n, a)) << "\n";
  }
}

}  // namespace meshfair::report

namespace meshfair::cli {

namespace {

namespace fs = std::filesystem;

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

int cmd_solve(const std::string& scenario_path, const std::string& out_dir,
              const std::string& mode_override, bool verbose) {
  Scenario s = load_scenario(scenario_path);
  if (!mode_override.empty()) s.mode = fairness_mode_from_string(mode_override);
  WaterfillOptions opts;
  opts.mode = s.mode;
  std::vector<solver::TraceRow> trace;
  if (verbose) opts.solver.trace = &trace;
  MaxMinResult result = waterfill(s.topology, opts);
  report::write_allocation_csv(out_path(out_dir, "allocation.csv"), s, result);
  report::write_wlan_config_csv(out_path(out_dir, "wlan_config.csv"), s,
                                configure_network(result));
  AuditReport audit = audit_allocation_structure(result, s.topology);
  std::printf("solve: %zu flows, %zu levels, audit: %zu violations, %zu flags\n",
              result.rates.size(), result.levels.size(), audit.violations.size(),
              audit.flags.size());
  if (verbose) {
    for (const auto& v : audit.violations) std::printf("  violation: %s\n", v.c_str());
    for (const auto& f : audit.flags) std::printf("  flag: %s\n", f.c_str());
    std::ofstream tr(out_path(out_dir, "solver_trace.csv"));
    tr << "stage,iter,mu,value,grad_norm\n";
    for (const auto& row : trace)
      tr << row.stage << ',' << row.iter << ',' << row.barrier_mu << ',' << row.value << ','
         << row.grad_norm << "\n";
  }
  return audit.pass() ? 0 : 1;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& config_path, int seeds, double duration, double window) {
  Scenario s = load_scenario(scenario_path);
  if (duration > 0.0) s.sim.duration = duration;
  if (window > 0.0) s.sim.window = window;
  std::vector<WlanConfigRow> config;
  if (!config_path.empty()) config = report::read_wlan_config_csv(config_path);

  std::vector<sim::SimMeasurement> runs(std::max(1, seeds));
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, seeds); ++k) {
    pool.emplace_back([&, k] {
      sim::SimConfig cfg = s.sim;
      cfg.seed = s.sim.seed + std::uint64_t(k);
      runs[std::size_t(k)] = sim::run(s.topology, config, cfg);
    });
  }
  for (auto& t : pool) t.join();

  for (const auto& m : runs) {
    std::string suffix = runs.size() > 1 ? "_seed" + std::to_string(m.seed) : "";
    report::write_flows_csv(out_path(out_dir, "flows" + suffix + ".csv"), s, m);
    report::write_wlan_csv(out_path(out_dir, "wlan" + suffix + ".csv"), s, m);
    report::write_station_trace_csv(out_path(out_dir, "station_trace" + suffix + ".csv"), s,
                                    m);
  }
  report::write_manifest(out_path(out_dir, "manifest.json"), s, runs);
  std::printf("simulate: %zu run(s) of %s for %gs\n", runs.size(), s.name.c_str(),
              s.sim.duration);
  return 0;
}

int cmd_compare(const std::string& allocation, const std::string& flows,
                const std::string& out_dir, double tolerance, double warmup) {
  report::ComparisonReport rep = report::compare_files(allocation, flows, tolerance, warmup);
  if (!out_dir.empty())
    report::write_comparison_csv(out_path(out_dir, "comparison.csv"), rep);
  for (const auto& fc : rep.flows)
    std::printf("%-10s theory %12.5g sim %12.5g rel_err %8.4f %s\n", fc.flow.c_str(),
                fc.theory, fc.sim_mean, fc.rel_err, fc.pass ? "ok" : "FAIL");
  return rep.pass ? 0 : 1;
}

int cmd_rate_region(double a, int n_min, int n_max, const std::string& out_dir) {
  report::write_efficiency_curve_csv(out_path(out_dir, "rate_region.csv"), a, n_min, n_max);
  std::printf("rate-region: wrote curve for n in [%d, %d], a=%g\n", n_min, n_max, a);
  return 0;
}

int cmd_oracle(const std::string& scenario_path, const std::string& out_dir, double mesh,
               double refined_mesh) {
  Scenario s = load_scenario(scenario_path);
  oracle::GridSpec spec;
  if (mesh > 0.0) spec.mesh = mesh;
  if (refined_mesh > 0.0) spec.refined_mesh = refined_mesh;
  oracle::GridAllocation alloc = oracle::grid_maxmin(s.topology, s.mode, spec);
  std::ofstream out(out_path(out_dir, "oracle_allocation.csv"));
  out << report::csv_header(s, 0);
  out << "flow,rate\n";
  for (const auto& [flow, rate] : alloc.rates) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", rate);
    out << flow << ',' << buf << "\n";
  }
  std::printf("oracle: min weighted rate %.8g\n", alloc.objective);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"max-min fair rate allocation and slot-level simulation for 802.11 mesh "
               "networks"};
  app.require_subcommand(1);

  std::string scenario, out_dir = "out", mode, config_path, allocation, flows;
  int seeds = 1, n_min = 2, n_max = 16;
  double duration = 0.0, window = 0.0, tolerance = 0.1, warmup = -1.0, a = 0.01;
  double mesh = 0.0, refined_mesh = 0.0;
  bool verbose = false;

  auto* solve = app.add_subcommand("solve", "water-filling max-min allocation");
  solve->add_option("--scenario", scenario)->required();
  solve->add_option("--out", out_dir);
  solve->add_option("--mode", mode, "throughput|time|goodput");
  solve->add_flag("--verbose", verbose);

  auto* simulate = app.add_subcommand("simulate", "slot-level MAC simulation");
  simulate->add_option("--scenario", scenario)->required();
  simulate->add_option("--out", out_dir);
  simulate->add_option("--config", config_path, "wlan_config.csv from solve");
  simulate->add_option("--seeds", seeds);
  simulate->add_option("--duration", duration, "override duration, seconds");
  simulate->add_option("--window", window, "override window, seconds");

  auto* compare = app.add_subcommand("compare", "simulation vs solver rates");
  compare->add_option("--allocation", allocation)->required();
  compare->add_option("--flows", flows)->required();
  compare->add_option("--out", out_dir);
  compare->add_option("--tolerance", tolerance);
  compare->add_option("--warmup", warmup);

  auto* rate_region = app.add_subcommand("rate-region", "boundary and efficiency curve");
  rate_region->add_option("--a", a);
  rate_region->add_option("--n-min", n_min);
  rate_region->add_option("--n-max", n_max);
  rate_region->add_option("--out", out_dir);

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force max-min for tiny scenarios");
  oracle_cmd->add_option("--scenario", scenario)->required();
  oracle_cmd->add_option("--out", out_dir);
  oracle_cmd->add_option("--mesh", mesh);
  oracle_cmd->add_option("--refined-mesh", refined_mesh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(scenario, out_dir, mode, verbose);
    if (simulate->parsed())
      return cmd_simulate(scenario, out_dir, config_path, seeds, duration, window);
    if (compare->parsed())
      return cmd_compare(allocation, flows, out_dir, tolerance, warmup < 0 ? 20.0 : warmup);
    if (rate_region->parsed()) return cmd_rate_region(a, n_min, n_max, out_dir);
    if (oracle_cmd->parsed()) return cmd_oracle(scenario, out_dir, mesh, refined_mesh);
  } catch (const SolveError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace meshfair::cli
