#include "meshfair/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "meshfair/model.hpp"

namespace meshfair {

namespace {

// Slack on settled-flow floors and probe pins. Must exceed the barrier
// solver's own gap or the step programs' feasible sets become too thin for
// the phase-one search; 1e-6 stays well under every acceptance tolerance.
constexpr double kRelief = 1e-6;
// Extra slack on refit demands so the final step's point seeds it strictly.
constexpr double kRefitRelief = 3e-6;

// Shared structure of the per-step programs: variable layout, constants and
// constraint indices for tightness inspection.
struct ProgramContext {
  const MeshTopology* topo = nullptr;
  FairnessMode mode = FairnessMode::throughput;
  FlowSets fs;
  double s_ref = 1.0;  // rate normalization: max l_bits/t_c over flows/hops
  double w_max = 1.0;
  std::vector<double> weight;     // normalized w-tilde per flow
  std::map<std::string, int> flow_idx;

  solver::LogProgram prog;
  int t_var = -1;
  std::vector<int> ts_var;                       // per flow
  std::map<StationChannel, int> y_var, eta_var;  // per transmitter
  std::map<std::string, solver::DenomBlock> denom;  // per channel

  // constraint bookkeeping, keyed by the constraint labels
  std::map<std::string, int> hop_constraint;  // "flow@station/channel"
  std::map<StationChannel, int> aggregate_constraint;
  std::map<std::string, int> cap_constraint;  // external rate caps
};

std::string hop_key(const std::string& flow, const Hop& hop) {
  return flow + "@" + hop.from + "/" + hop.channel;
}

double wlan_t_c(const MeshTopology& topo, const std::string& channel) {
  const WlanParams* w = topo.wlan(channel);
  if (!w) throw std::invalid_argument("unknown channel " + channel);
  return w->t_c;
}

ProgramContext build_context(const MeshTopology& topo, const WaterfillOptions& opts) {
  ProgramContext ctx;
  ctx.topo = &topo;
  ctx.mode = opts.mode;
  ctx.fs = flow_sets(topo);

  ctx.s_ref = 0.0;
  for (const auto& f : topo.flows)
    for (const auto& hop : f.route)
      ctx.s_ref = std::max(ctx.s_ref, f.l_bits / wlan_t_c(topo, hop.channel));
  if (ctx.s_ref <= 0.0) throw std::invalid_argument("waterfill: no flows");

  ctx.w_max = 0.0;
  for (const auto& f : topo.flows) ctx.w_max = std::max(ctx.w_max, flow_weight(f, opts.mode));
  ctx.weight.reserve(topo.flows.size());
  for (const auto& f : topo.flows)
    ctx.weight.push_back(flow_weight(f, opts.mode) / ctx.w_max);

  // Variables: level, per-flow log rates, per-transmitter attempt rates and
  // burst sizes (burst pinned to 1 where only one flow is carried).
  ctx.t_var = ctx.prog.add_var("t", std::log(1e-12), std::log(1e4));
  for (std::size_t p = 0; p < topo.flows.size(); ++p) {
    ctx.flow_idx[topo.flows[p].id] = static_cast<int>(p);
    ctx.ts_var.push_back(
        ctx.prog.add_var("s." + topo.flows[p].id, std::log(1e-12), std::log(4.0)));
  }
  for (const auto& wlan : topo.wlans) {
    auto tx = ctx.fs.transmitters.find(wlan.channel_id);
    if (tx == ctx.fs.transmitters.end()) continue;
    solver::DenomBlock block;
    block.base = wlan.a;
    double x_hi = std::max(wlan.p_bar - 1.0, 1e-6) * 2.718281828459045;
    if (wlan.y > 0.0) x_hi = std::min(x_hi, wlan.y);
    for (const auto& station : tx->second) {
      StationChannel key{station, wlan.channel_id};
      int y = ctx.prog.add_var("x." + station + "@" + wlan.channel_id,
                               std::log(1e-9), std::log(x_hi));
      ctx.y_var[key] = y;
      block.y_var.push_back(y);
      int n_bar = ctx.fs.n_bar(station, wlan.channel_id);
      if (n_bar > 1) {
        int eta = ctx.prog.add_var("n." + station + "@" + wlan.channel_id, 0.0,
                                   std::log(double(n_bar)));
        ctx.eta_var[key] = eta;
        block.eta_var.push_back(eta);
      } else {
        block.eta_var.push_back(-1);
      }
    }
    ctx.denom[wlan.channel_id] = std::move(block);
  }

  // Rate-region constraints, identical in every step program.
  for (const auto& f : topo.flows) {
    int p = ctx.flow_idx[f.id];
    for (const auto& hop : f.route) {
      const WlanParams* wlan = topo.wlan(hop.channel);
      double scaling = send_scaling(f, hop.from, opts.mode);
      solver::Constraint c;
      c.label = "hop." + f.id + "@" + hop.from + "/" + hop.channel;
      c.affine.constant = std::log(scaling * wlan->t_c * ctx.s_ref / f.l_bits);
      c.affine.add(ctx.ts_var[p], 1.0);
      c.affine.add(ctx.y_var.at({hop.from, hop.channel}), -1.0);
      c.denom.push_back(ctx.denom.at(hop.channel));
      ctx.hop_constraint[hop_key(f.id, hop)] = static_cast<int>(ctx.prog.constraints.size());
      ctx.prog.constraints.push_back(std::move(c));
    }
    if (f.max_rate > 0.0) {
      solver::Constraint c;
      c.label = "cap." + f.id;
      c.affine.constant = -std::log(f.max_rate / ctx.s_ref);
      c.affine.add(ctx.ts_var[p], 1.0);
      ctx.cap_constraint[f.id] = static_cast<int>(ctx.prog.constraints.size());
      ctx.prog.constraints.push_back(std::move(c));
    }
  }
  for (const auto& [key, flows] : ctx.fs.per_station) {
    const auto& [station, channel] = key;
    const WlanParams* wlan = topo.wlan(channel);
    solver::Constraint c;
    c.label = "agg." + station + "/" + channel;
    solver::LseBlock lse;
    for (const auto& flow_id : flows) {
      const Flow* f = topo.flow(flow_id);
      double scaling = send_scaling(*f, station, ctx.mode);
      solver::Affine term;
      term.constant = std::log(scaling * wlan->t_c * ctx.s_ref / f->l_bits);
      term.add(ctx.ts_var[ctx.flow_idx[flow_id]], 1.0);
      lse.exponents.push_back(std::move(term));
    }
    c.lse.push_back(std::move(lse));
    c.denom.push_back(ctx.denom.at(channel));
    c.affine.add(ctx.y_var.at(key), -1.0);
    auto eta = ctx.eta_var.find(key);
    if (eta != ctx.eta_var.end()) c.affine.add(eta->second, -1.0);
    ctx.aggregate_constraint[key] = static_cast<int>(ctx.prog.constraints.size());
    ctx.prog.constraints.push_back(std::move(c));
  }
  for (const auto& wlan : topo.wlans) {
    auto tx = ctx.fs.transmitters.find(wlan.channel_id);
    if (tx == ctx.fs.transmitters.end()) continue;
    solver::Constraint c;
    c.label = "pidle." + wlan.channel_id;
    c.affine.constant = -std::log(wlan.p_bar);
    solver::SoftplusBlock block;
    for (const auto& station : tx->second) {
      solver::Affine term;
      term.add(ctx.y_var.at({station, wlan.channel_id}), 1.0);
      block.exponents.push_back(std::move(term));
    }
    c.softplus.push_back(std::move(block));
    ctx.prog.constraints.push_back(std::move(c));
  }
  return ctx;
}

// Active-flow level links and settled-flow floors appended per step.
void append_step_constraints(ProgramContext& ctx, const std::vector<std::string>& active,
                             const std::map<std::string, double>& settled) {
  for (const auto& flow_id : active) {
    int p = ctx.flow_idx.at(flow_id);
    solver::Constraint c;
    c.label = "level." + flow_id;
    c.affine.constant = std::log(ctx.weight[p]);
    c.affine.add(ctx.t_var, 1.0);
    c.affine.add(ctx.ts_var[p], -1.0);
    ctx.prog.constraints.push_back(std::move(c));
  }
  for (const auto& [flow_id, level] : settled) {
    int p = ctx.flow_idx.at(flow_id);
    solver::Constraint c;
    c.label = "settled." + flow_id;
    c.affine.constant = std::log(level * ctx.weight[p]) - kRelief;
    c.affine.add(ctx.ts_var[p], -1.0);
    ctx.prog.constraints.push_back(std::move(c));
  }
}

// Domain seed: P_idle halfway between 1/p_bar and 1, bursts at the middle of
// their boxes, rates tiny. Strictly interior for any step-0 program.
std::vector<double> step_seed(const ProgramContext& ctx) {
  std::vector<double> v(ctx.prog.vars.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = 0.5 * (ctx.prog.vars[j].lower + ctx.prog.vars[j].upper);
  for (const auto& wlan : ctx.topo->wlans) {
    auto tx = ctx.fs.transmitters.find(wlan.channel_id);
    if (tx == ctx.fs.transmitters.end()) continue;
    double p_half = 0.5 * (1.0 + 1.0 / wlan.p_bar);
    double x0 = std::exp(std::log(1.0 / p_half) / double(tx->second.size())) - 1.0;
    for (const auto& station : tx->second) {
      int y = ctx.y_var.at({station, wlan.channel_id});
      double lo = ctx.prog.vars[y].lower, hi = ctx.prog.vars[y].upper;
      v[y] = std::clamp(std::log(std::max(x0, 1e-8)), lo + 0.1, hi - 0.1);
    }
  }
  double ts0 = std::log(1e-6);
  double t0 = std::log(1e-8);
  for (int ts : ctx.ts_var) v[ts] = ts0;
  v[ctx.t_var] = t0;
  return v;
}

struct StepSolved {
  StepOutcome outcome;
  ProgramContext ctx;
};

StepSolved solve_step(const MeshTopology& topo, const WaterfillOptions& opts,
                      const std::vector<std::string>& active,
                      const std::map<std::string, double>& settled,
                      const std::vector<double>* warm = nullptr) {
  StepSolved s{{}, build_context(topo, opts)};
  append_step_constraints(s.ctx, active, settled);
  s.ctx.prog.objective = s.ctx.t_var;
  std::vector<double> seed;
  if (warm && warm->size() == s.ctx.prog.vars.size())
    seed = *warm;
  else
    seed = step_seed(s.ctx);
  s.outcome.solution = solver::solve(s.ctx.prog, opts.solver, &seed);
  if (s.outcome.solution.status == solver::SolveStatus::infeasible)
    throw SolveError("water-filling step infeasible: " + s.outcome.solution.certificate);
  s.outcome.level = std::exp(s.outcome.solution.values[s.ctx.t_var]);
  return s;
}

// Level expressed in scenario units: rates are level * w(p).
double denormalize_level(const ProgramContext& ctx, double t_norm) {
  return t_norm * ctx.s_ref / ctx.w_max;
}

double normalize_level(const ProgramContext& ctx, double level) {
  return level * ctx.w_max / ctx.s_ref;
}

std::map<std::string, double> normalize_settled(const ProgramContext& ctx,
                                                const std::map<std::string, double>& settled) {
  std::map<std::string, double> norm;
  for (const auto& [flow, level] : settled) norm[flow] = normalize_level(ctx, level);
  return norm;
}

}  // namespace

StepOutcome step_max_common_rate(const MeshTopology& topo, const WaterfillOptions& opts,
                                 const std::vector<std::string>& active,
                                 const std::map<std::string, double>& settled) {
  if (active.empty()) throw std::invalid_argument("step_max_common_rate: empty active set");
  ProgramContext probe_ctx = build_context(topo, opts);
  StepSolved s = solve_step(topo, opts, active, normalize_settled(probe_ctx, settled));
  s.outcome.level = denormalize_level(s.ctx, s.outcome.level);
  return s.outcome;
}

BottleneckScan detect_bottlenecked(const MeshTopology& topo, const WaterfillOptions& opts,
                                   const std::vector<std::string>& active, double level,
                                   const std::map<std::string, double>& settled,
                                   const StepOutcome* step) {
  ProgramContext base = build_context(topo, opts);
  double t_norm = normalize_level(base, level);
  std::map<std::string, double> settled_norm = normalize_settled(base, settled);

  // The step optimum is strictly interior for every probe program (the pin
  // sits kRelief below it); without that warm start the probes' thin
  // feasible sets defeat the phase-one search.
  StepSolved resolved{{}, {}};
  if (!step || step->solution.values.size() != base.prog.vars.size()) {
    resolved = solve_step(topo, opts, active, settled_norm);
    step = &resolved.outcome;
    t_norm = std::min(t_norm, step->level);
  } else {
    t_norm = std::min(t_norm, std::exp(step->solution.values[base.t_var]));
  }

  BottleneckScan scan;
  double worst_max = std::numeric_limits<double>::infinity();
  std::string worst_flow;

  for (const auto& flow_id : active) {
    ProgramContext ctx = build_context(topo, opts);
    append_step_constraints(ctx, active, settled_norm);
    // Pin the common level and maximize this flow alone.
    solver::Constraint pin;
    pin.label = "pin.level";
    pin.affine.constant = std::log(t_norm) - kRelief;
    pin.affine.add(ctx.t_var, -1.0);
    ctx.prog.constraints.push_back(std::move(pin));
    int p = ctx.flow_idx.at(flow_id);
    ctx.prog.objective = ctx.ts_var[p];
    solver::Solution sol = solver::solve(ctx.prog, opts.solver, &step->solution.values);
    if (sol.status == solver::SolveStatus::infeasible)
      throw SolveError("bottleneck probe infeasible for " + flow_id + ": " + sol.certificate);
    double best = std::exp(sol.values[ctx.ts_var[p]]) / ctx.weight[p];
    if (best < worst_max) {
      worst_max = best;
      worst_flow = flow_id;
    }
    if (best > t_norm * (1.0 + opts.probe_rel_tol)) continue;  // can still rise

    scan.removed.push_back(flow_id);
    // Tight constraints at the probe optimum name the bottleneck WLAN(s).
    const Flow* f = topo.flow(flow_id);
    std::set<std::string> tight;
    double best_gap = -std::numeric_limits<double>::infinity();
    std::string best_channel;
    for (const auto& hop : f->route) {
      double g_hop = ctx.prog.constraints[ctx.hop_constraint.at(hop_key(flow_id, hop))]
                         .eval(sol.values);
      double g_agg = ctx.prog.constraints[ctx.aggregate_constraint.at({hop.from, hop.channel})]
                         .eval(sol.values);
      double g = std::max(g_hop, g_agg);
      if (g > -1e-5) tight.insert(hop.channel);
      if (g > best_gap) {
        best_gap = g;
        best_channel = hop.channel;
      }
    }
    bool cap_tight = false;
    auto cap_it = ctx.cap_constraint.find(flow_id);
    if (cap_it != ctx.cap_constraint.end())
      cap_tight = ctx.prog.constraints[cap_it->second].eval(sol.values) > -1e-5;
    if (tight.empty() && cap_tight) {
      scan.bottleneck[flow_id] = "rate-cap";
    } else {
      if (tight.empty()) tight.insert(best_channel);  // numerical fallback
      scan.bottleneck[flow_id] = *tight.begin();      // lexicographically smallest
    }
    scan.tight_channels[flow_id].assign(tight.begin(), tight.end());
    if (cap_tight) scan.tight_channels[flow_id].push_back("rate-cap");
  }

  if (scan.removed.empty() && !active.empty()) {
    // Tolerance fallback: the flow with the least headroom is the bottleneck.
    scan.removed.push_back(worst_flow);
    const Flow* f = topo.flow(worst_flow);
    scan.bottleneck[worst_flow] = f->route.front().channel;
    scan.tight_channels[worst_flow] = {f->route.front().channel};
  }
  return scan;
}

namespace {

// Minimal-attempt-rate operating point serving the final rates: minimize
// sum log(x N) per WLAN; station aggregates end up tight.
WlanAllocation refit_wlan(const MeshTopology& topo, const WaterfillOptions& opts,
                          const FlowSets& fs, const WlanParams& wlan,
                          const std::map<std::string, double>& rates) {
  const auto& stations = fs.transmitters.at(wlan.channel_id);
  WlanAllocation alloc;
  alloc.stations = stations;
  alloc.p_bar = wlan.p_bar;
  alloc.pidle_target = 1.0 / wlan.p_bar;

  solver::LogProgram prog;
  solver::DenomBlock block;
  block.base = wlan.a;
  double x_hi = std::max(wlan.p_bar - 1.0, 1e-6) * 2.718281828459045;
  if (wlan.y > 0.0) x_hi = std::min(x_hi, wlan.y);
  std::map<std::string, int> y_var, eta_var;
  for (const auto& station : stations) {
    int y = prog.add_var("x." + station, std::log(1e-9), std::log(x_hi));
    y_var[station] = y;
    block.y_var.push_back(y);
    int n_bar = fs.n_bar(station, wlan.channel_id);
    if (n_bar > 1) {
      int eta = prog.add_var("n." + station, 0.0, std::log(double(n_bar)));
      eta_var[station] = eta;
      block.eta_var.push_back(eta);
    } else {
      block.eta_var.push_back(-1);
    }
  }
  int obj = prog.add_var("objective", -800.0, 800.0);

  for (const auto& station : stations) {
    const auto& flows = fs.per_station.at({station, wlan.channel_id});
    double demand = 0.0;  // station airtime demand
    for (const auto& flow_id : flows) {
      const Flow* f = topo.flow(flow_id);
      double scaling = send_scaling(*f, station, opts.mode);
      double u = scaling * rates.at(flow_id) * wlan.t_c / f->l_bits * (1.0 - kRelief);
      demand += u;
      solver::Constraint c;  // one frame per opportunity cap
      c.label = "hop." + flow_id;
      c.affine.constant = std::log(u);
      c.affine.add(y_var[station], -1.0);
      c.denom.push_back(block);
      prog.constraints.push_back(std::move(c));
    }
    solver::Constraint c;
    c.label = "agg." + station;
    c.affine.constant = std::log(demand);
    c.affine.add(y_var[station], -1.0);
    auto eta = eta_var.find(station);
    if (eta != eta_var.end()) c.affine.add(eta->second, -1.0);
    c.denom.push_back(block);
    prog.constraints.push_back(std::move(c));
  }
  {
    solver::Constraint c;
    c.label = "pidle." + wlan.channel_id;
    c.affine.constant = -std::log(wlan.p_bar);
    solver::SoftplusBlock sp;
    for (const auto& station : stations) {
      solver::Affine term;
      term.add(y_var[station], 1.0);
      sp.exponents.push_back(std::move(term));
    }
    c.softplus.push_back(std::move(sp));
    prog.constraints.push_back(std::move(c));
  }
  {
    solver::Constraint c;
    c.label = "objective.bound";
    c.affine.add(obj, 1.0);
    for (const auto& station : stations) {
      c.affine.add(y_var[station], 1.0);
      auto eta = eta_var.find(station);
      if (eta != eta_var.end()) c.affine.add(eta->second, 1.0);
    }
    prog.constraints.push_back(std::move(c));
  }
  prog.objective = obj;

  solver::Solution sol = solver::solve(prog, opts.solver);
  if (sol.status == solver::SolveStatus::infeasible)
    throw SolveError("operating-point refit infeasible on " + wlan.channel_id + ": " +
                     sol.certificate);
  for (const auto& station : stations) {
    alloc.x.push_back(std::exp(sol.values[y_var[station]]));
    auto eta = eta_var.find(station);
    alloc.n.push_back(eta == eta_var.end() ? 1.0 : std::exp(sol.values[eta->second]));
  }
  alloc.denominator = denominator_x(alloc.x, alloc.n, wlan.a);
  return alloc;
}

}  // namespace

MaxMinResult waterfill(const MeshTopology& topo, const WaterfillOptions& opts) {
  auto violations = validate(topo);
  if (!valid(violations)) {
    std::ostringstream msg;
    msg << "waterfill: invalid topology:";
    for (const auto& v : violations)
      if (!v.warning) msg << " [" << v.entity << ": " << v.rule << "]";
    throw std::invalid_argument(msg.str());
  }
  if (topo.flows.empty()) throw std::invalid_argument("waterfill: no flows");

  MaxMinResult result;
  result.mode = opts.mode;

  std::vector<std::string> active;
  for (const auto& f : topo.flows) active.push_back(f.id);
  std::map<std::string, double> settled;  // normalized levels

  ProgramContext norm_ctx = build_context(topo, opts);
  std::vector<double> prev_values;

  while (!active.empty()) {
    if (result.levels.size() > topo.flows.size())
      throw SolveError("waterfill: iteration bound exceeded");
    StepSolved step = solve_step(topo, opts, active, settled,
                                 prev_values.empty() ? nullptr : &prev_values);
    prev_values = step.outcome.solution.values;
    double t_norm = step.outcome.level;
    double level = denormalize_level(step.ctx, t_norm);

    BottleneckScan scan =
        detect_bottlenecked(topo, opts, active, level,
                            [&] {
                              std::map<std::string, double> s;
                              for (const auto& [f, l] : settled)
                                s[f] = denormalize_level(norm_ctx, l);
                              return s;
                            }(),
                            &step.outcome);

    int level_idx = static_cast<int>(result.levels.size());
    result.levels.push_back(level);
    for (const auto& flow_id : scan.removed) {
      settled[flow_id] = t_norm;
      result.level_index[flow_id] = level_idx;
      result.bottleneck[flow_id] = scan.bottleneck[flow_id];
      result.tight_channels[flow_id] = scan.tight_channels[flow_id];
      for (const auto& ch : scan.tight_channels[flow_id])
        if (ch != "rate-cap") result.bottlenecked_flows[ch].push_back(flow_id);
      active.erase(std::remove(active.begin(), active.end(), flow_id), active.end());
    }
  }

  for (const auto& f : topo.flows) {
    int p = norm_ctx.flow_idx[f.id];
    result.rates[f.id] =
        result.levels[result.level_index[f.id]] * norm_ctx.weight[p] * norm_ctx.w_max;
  }

  // Final operating points and per-WLAN structure.
  for (const auto& wlan : topo.wlans) {
    if (norm_ctx.fs.transmitters.find(wlan.channel_id) == norm_ctx.fs.transmitters.end())
      continue;
    WlanAllocation alloc = refit_wlan(topo, opts, norm_ctx.fs, wlan, result.rates);
    // x_bar: attempt rate of stations carrying bottlenecked flows.
    double x_bar = 0.0;
    auto bf = result.bottlenecked_flows.find(wlan.channel_id);
    if (bf != result.bottlenecked_flows.end()) {
      for (std::size_t k = 0; k < alloc.stations.size(); ++k) {
        const auto& carried = norm_ctx.fs.per_station.at({alloc.stations[k], wlan.channel_id});
        for (const auto& flow_id : carried)
          if (std::find(bf->second.begin(), bf->second.end(), flow_id) != bf->second.end())
            x_bar = std::max(x_bar, alloc.x[k]);
      }
    } else {
      x_bar = *std::max_element(alloc.x.begin(), alloc.x.end());
    }
    alloc.x_bar = x_bar;
    alloc.y = wlan.y > 0.0 ? wlan.y : x_bar;
    result.wlans[wlan.channel_id] = std::move(alloc);
  }
  return result;
}

AuditReport audit_allocation_structure(const MaxMinResult& result, const MeshTopology& topo,
                                       double tol) {
  AuditReport report;
  FlowSets fs = flow_sets(topo);
  auto note = [&](bool expected_oddity, const std::string& msg) {
    (expected_oddity ? report.flags : report.violations).push_back(msg);
  };

  for (const auto& [channel, alloc] : result.wlans) {
    const WlanParams* wlan = topo.wlan(channel);
    auto bf = result.bottlenecked_flows.find(channel);
    if (bf == result.bottlenecked_flows.end()) {
      report.flags.push_back(channel + ": no bottlenecked flows; y set to max station rate");
      continue;
    }
    double X = alloc.denominator;

    // Heterogeneous goodput scaling breaks the common-attempt-rate and
    // saturation structure by design; those findings become flags.
    bool heterogeneous_scaling = false;
    if (result.mode == FairnessMode::goodput) {
      double lo = 1e300, hi = 0.0;
      for (const auto& flow_id : bf->second) {
        const Flow* f = topo.flow(flow_id);
        for (const auto& hop : f->route)
          if (hop.channel == channel) {
            double s = send_scaling(*f, hop.from, result.mode);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
          }
      }
      heterogeneous_scaling = hi > lo * (1.0 + tol);
    }

    // (1) stations carrying bottlenecked flows share x_bar = y(c).
    std::vector<std::string> vb;
    for (std::size_t k = 0; k < alloc.stations.size(); ++k) {
      const auto& carried = fs.per_station.at({alloc.stations[k], channel});
      for (const auto& flow_id : carried)
        if (std::find(bf->second.begin(), bf->second.end(), flow_id) != bf->second.end()) {
          vb.push_back(alloc.stations[k]);
          break;
        }
    }
    double x_lo = 1e300, x_hi = 0.0;
    for (std::size_t k = 0; k < alloc.stations.size(); ++k)
      if (std::find(vb.begin(), vb.end(), alloc.stations[k]) != vb.end()) {
        x_lo = std::min(x_lo, alloc.x[k]);
        x_hi = std::max(x_hi, alloc.x[k]);
      }
    if (x_hi > x_lo * (1.0 + tol))
      note(heterogeneous_scaling,
           channel + ": bottlenecked stations' attempt rates differ: [" +
               std::to_string(x_lo) + ", " + std::to_string(x_hi) + "]");

    // (2) bottlenecked flows: exactly one frame per opportunity; aggregates tight.
    for (const auto& flow_id : bf->second) {
      const Flow* f = topo.flow(flow_id);
      for (const auto& hop : f->route) {
        if (hop.channel != channel) continue;
        auto k = std::find(alloc.stations.begin(), alloc.stations.end(), hop.from) -
                 alloc.stations.begin();
        double u = send_scaling(*f, hop.from, result.mode) * result.rates.at(flow_id) *
                   wlan->t_c / f->l_bits;
        double share = u * X / alloc.x[k];
        if (std::abs(share - 1.0) > tol)
          note(heterogeneous_scaling && share < 1.0,
               flow_id + "@" + channel + ": bottlenecked flow burst share " +
                   std::to_string(share) + " != 1");
      }
    }
    for (std::size_t k = 0; k < alloc.stations.size(); ++k) {
      const auto& carried = fs.per_station.at({alloc.stations[k], channel});
      double demand = 0.0;
      for (const auto& flow_id : carried) {
        const Flow* f = topo.flow(flow_id);
        demand += send_scaling(*f, alloc.stations[k], result.mode) *
                  result.rates.at(flow_id) * wlan->t_c / f->l_bits;
      }
      double supply = alloc.n[k] * alloc.x[k] / X;
      if (std::abs(demand - supply) > tol * std::max(supply, 1e-300))
        report.violations.push_back(alloc.stations[k] + "@" + channel +
                                    ": aggregate not tight: demand " + std::to_string(demand) +
                                    " vs " + std::to_string(supply));
    }

    // (3) non-bottlenecked flows have strict slack against the design rate.
    for (const auto& flow_id : fs.per_channel.at(channel)) {
      if (std::find(bf->second.begin(), bf->second.end(), flow_id) != bf->second.end())
        continue;
      const Flow* f = topo.flow(flow_id);
      for (const auto& hop : f->route) {
        if (hop.channel != channel) continue;
        double u = send_scaling(*f, hop.from, result.mode) * result.rates.at(flow_id) *
                   wlan->t_c / f->l_bits;
        double share = u * X / alloc.x_bar;
        if (share >= 1.0 - tol)
          report.violations.push_back(flow_id + "@" + channel +
                                      ": transit flow saturated: share " +
                                      std::to_string(share));
      }
    }
  }
  return report;
}

int cw_for_tau(double tau_bar) {
  if (tau_bar <= 0.0) return 1024;
  return std::max(2, static_cast<int>(std::lround(1.0 + 2.0 / tau_bar)));
}

std::vector<WlanConfigRow> configure_network(const MaxMinResult& result) {
  std::vector<WlanConfigRow> rows;
  for (const auto& [channel, alloc] : result.wlans) {
    WlanConfigRow row;
    row.channel = channel;
    row.y = alloc.y;
    row.cw = cw_for_tau(alloc.y / (1.0 + alloc.y));
    row.pidle_target = alloc.pidle_target;
    row.p_bar = alloc.p_bar;
    row.stations = alloc.stations;
    row.x = alloc.x;
    row.n = alloc.n;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace meshfair
