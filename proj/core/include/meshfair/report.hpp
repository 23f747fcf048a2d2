#ifndef MESHFAIR_REPORT_HPP
#define MESHFAIR_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "meshfair/scenario.hpp"
#include "meshfair/simulator.hpp"
#include "meshfair/waterfill.hpp"

namespace meshfair::report {

// Provenance header line written at the top of every CSV.
std::string csv_header(const Scenario& s, std::uint64_t seed);

void write_allocation_csv(const std::string& path, const Scenario& s,
                          const MaxMinResult& result);
void write_wlan_config_csv(const std::string& path, const Scenario& s,
                           const std::vector<WlanConfigRow>& rows);
std::vector<WlanConfigRow> read_wlan_config_csv(const std::string& path);

void write_flows_csv(const std::string& path, const Scenario& s,
                     const sim::SimMeasurement& m);
void write_wlan_csv(const std::string& path, const Scenario& s,
                    const sim::SimMeasurement& m);
void write_station_trace_csv(const std::string& path, const Scenario& s,
                             const sim::SimMeasurement& m);
void write_manifest(const std::string& path, const Scenario& s,
                    const std::vector<sim::SimMeasurement>& runs);

struct FlowComparison {
  std::string flow;
  double theory = 0.0;
  double sim_mean = 0.0;
  double rel_err = 0.0;
  bool pass = true;
};

struct ComparisonReport {
  std::vector<FlowComparison> flows;
  double tolerance = 0.1;
  bool pass = true;
};

// Long-run simulated means (windows past `warmup`) against solver rates.
ComparisonReport compare(const std::map<std::string, double>& theory_rates,
                         const sim::SimMeasurement& m, double tolerance, double warmup);

// CSV-file variant used by the CLI: reads allocation.csv and flows.csv.
ComparisonReport compare_files(const std::string& allocation_csv,
                               const std::string& flows_csv, double tolerance,
                               double warmup);

void write_comparison_csv(const std::string& path, const ComparisonReport& report);

// Figure-analog bundles.
void write_wlan_flow_hist_csv(const std::string& path, const Scenario& s,
                              const sim::SimMeasurement& m, double warmup);
void write_time_alloc_csv(const std::string& path, const Scenario& s,
                          const MaxMinResult& result, const sim::SimMeasurement& m,
                          double warmup);
void write_efficiency_curve_csv(const std::string& path, double a, int n_min, int n_max);

}  // namespace meshfair::report

namespace meshfair::cli {

// Entry point behind the meshfair binary; returns the process exit code:
// 0 pass, 1 tolerance fail, 2 input error, 3 solver failure.
int run(int argc, const char* const* argv);

}  // namespace meshfair::cli

#endif
