#include "meshfair/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "meshfair/model.hpp"

namespace meshfair::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-9;  // lexicographic tie epsilon, below grid resolution

// One x dimension of the grid: a transmitter on a channel.
struct Dim {
  std::string station;
  int channel;  // index into topo.wlans
  int n_bar;
  double x_hi;
};

struct Budget {
  std::vector<std::pair<int, double>> coef;  // (flow index, coefficient)
  int dim;                                   // owning (station, channel) dimension
};

// Progressive filling on the polytope {s >= 0 : s_p <= cap_p,
// sum coef_p s_p <= limit_b}: raise all weighted rates together and freeze
// the members of every constraint that becomes tight. Yields the max-min
// allocation of the fixed polytope.
bool progressive_fill(const std::vector<double>& cap,
                      const std::vector<Budget>& budgets,
                      const std::vector<double>& budget_limit,
                      const std::vector<double>& w, std::vector<double>& rate) {
  const std::size_t nf = w.size();
  rate.assign(nf, 0.0);
  std::vector<bool> frozen(nf, false);
  std::size_t remaining = nf;
  double level = 0.0;
  for (std::size_t round = 0; round < 2 * nf && remaining > 0; ++round) {
    double next = kInf;
    for (std::size_t p = 0; p < nf; ++p)
      if (!frozen[p]) next = std::min(next, cap[p] / w[p]);
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      double used = 0.0, slope = 0.0;
      for (auto [p, c] : budgets[b].coef) {
        if (frozen[p])
          used += c * rate[p];
        else
          slope += c * w[p];
      }
      if (slope > 0.0) next = std::min(next, (budget_limit[b] - used) / slope);
    }
    if (!std::isfinite(next)) return false;
    next = std::max(next, level);
    double eps = 1e-12 * std::max(1.0, next);
    for (std::size_t p = 0; p < nf; ++p)
      if (!frozen[p] && cap[p] / w[p] <= next + eps) {
        frozen[p] = true;
        rate[p] = w[p] * next;
        --remaining;
      }
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      double used = 0.0, slope = 0.0;
      for (auto [p, c] : budgets[b].coef) {
        if (frozen[p])
          used += c * rate[p];
        else
          slope += c * w[p];
      }
      if (slope > 0.0 && (budget_limit[b] - used) / slope <= next + eps) {
        for (auto [p, c] : budgets[b].coef)
          if (!frozen[p]) {
            frozen[p] = true;
            rate[p] = w[p] * next;
            --remaining;
          }
      }
    }
    level = next;
  }
  return remaining == 0;
}

// Ascending sorted weighted rates; a > b lexicographically?
bool lex_better(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    double eps = kTieEps * (1.0 + std::abs(sb[i]));
    if (sa[i] > sb[i] + eps) return true;
    if (sa[i] < sb[i] - eps) return false;
  }
  return false;
}

}  // namespace

GridAllocation grid_maxmin(const MeshTopology& topo, FairnessMode mode,
                           const GridSpec& spec) {
  if (spec.mesh <= 0.0 || spec.refined_mesh <= 0.0)
    throw std::invalid_argument("grid_maxmin: mesh must be positive");
  FlowSets fs = flow_sets(topo);

  const std::size_t nf = topo.flows.size();
  std::vector<double> w(nf);
  for (std::size_t p = 0; p < nf; ++p) w[p] = flow_weight(topo.flows[p], mode);

  // Grid dimensions: one x per transmitting (station, channel).
  std::vector<Dim> dims;
  for (std::size_t c = 0; c < topo.wlans.size(); ++c) {
    const auto& wlan = topo.wlans[c];
    auto it = fs.transmitters.find(wlan.channel_id);
    if (it == fs.transmitters.end()) continue;
    for (const auto& station : it->second) {
      Dim d;
      d.station = station;
      d.channel = static_cast<int>(c);
      d.n_bar = fs.n_bar(station, wlan.channel_id);
      d.x_hi = std::max(wlan.p_bar - 1.0, 1e-9);
      if (wlan.y > 0.0) d.x_hi = std::min(d.x_hi, wlan.y);
      dims.push_back(d);
    }
  }
  const std::size_t nd = dims.size();
  if (nd == 0) throw std::invalid_argument("grid_maxmin: no transmitting stations");

  // Per-flow constraint structure against the dims.
  std::vector<double> flow_cap_static(nf, kInf);  // external rate caps
  std::vector<std::vector<std::pair<int, double>>> hop_dims(nf);  // (dim, A*t_c/l)
  std::vector<Budget> budgets;
  std::vector<int> budget_n_bar;
  auto dim_of = [&](const std::string& station, int channel) {
    for (std::size_t d = 0; d < nd; ++d)
      if (dims[d].station == station && dims[d].channel == channel)
        return static_cast<int>(d);
    return -1;
  };
  for (std::size_t d = 0; d < nd; ++d) {
    Budget b;
    b.dim = static_cast<int>(d);
    budgets.push_back(b);
    budget_n_bar.push_back(dims[d].n_bar);
  }
  for (std::size_t p = 0; p < nf; ++p) {
    const Flow& f = topo.flows[p];
    if (f.max_rate > 0.0) flow_cap_static[p] = f.max_rate;
    for (const auto& hop : f.route) {
      const WlanParams* wlan = topo.wlan(hop.channel);
      int c = -1;
      for (std::size_t k = 0; k < topo.wlans.size(); ++k)
        if (topo.wlans[k].channel_id == hop.channel) c = static_cast<int>(k);
      int d = dim_of(hop.from, c);
      if (d < 0) throw std::invalid_argument("grid_maxmin: hop without dimension");
      double scale = send_scaling(f, hop.from, mode) * wlan->t_c / f.l_bits;
      hop_dims[p].push_back({d, scale});
      budgets[d].coef.push_back({static_cast<int>(p), scale});
    }
  }

  struct Pass {
    std::vector<double> lo, hi;
    double mesh;
  };
  Pass pass;
  pass.mesh = spec.mesh;
  pass.lo.assign(nd, 0.0);
  pass.hi.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) pass.hi[d] = dims[d].x_hi;

  GridAllocation best;
  std::vector<double> best_weighted;
  std::vector<double> best_x(nd, 0.0);
  bool have_best = false;

  std::vector<double> x(nd), cap(nf), limit(budgets.size()), rate, weighted(nf);
  std::vector<int> nsel(nd, 1);

  auto evaluate_grid = [&](const Pass& ps) {
    std::vector<int> steps(nd);
    double total = 1.0;
    for (std::size_t d = 0; d < nd; ++d) {
      steps[d] = static_cast<int>(std::ceil((ps.hi[d] - ps.lo[d]) / ps.mesh)) + 1;
      total *= steps[d];
    }
    for (std::size_t d = 0; d < nd; ++d) total *= dims[d].n_bar;
    if (total > spec.max_points)
      throw std::invalid_argument("grid_maxmin: grid too large (" +
                                  std::to_string(static_cast<long long>(total)) +
                                  " points)");
    std::vector<int> xi(nd, 0);
    for (;;) {
      for (std::size_t d = 0; d < nd; ++d)
        x[d] = std::min(ps.lo[d] + xi[d] * ps.mesh, ps.hi[d]);
      // N odometer
      std::fill(nsel.begin(), nsel.end(), 1);
      for (;;) {
        // Per-channel feasibility and denominators.
        bool feasible = true;
        std::vector<double> Xc(topo.wlans.size(), 0.0);
        for (std::size_t c = 0; c < topo.wlans.size() && feasible; ++c) {
          double prod = 1.0, lin = 0.0;
          bool any = false;
          for (std::size_t d = 0; d < nd; ++d)
            if (dims[d].channel == static_cast<int>(c)) {
              prod *= 1.0 + x[d];
              lin += (nsel[d] - 1.0) * x[d];
              any = true;
            }
          if (!any) continue;
          if (prod > topo.wlans[c].p_bar * (1.0 + 1e-12)) {
            feasible = false;
            break;
          }
          Xc[c] = topo.wlans[c].a + lin + prod - 1.0;
        }
        if (feasible) {
          for (std::size_t p = 0; p < nf; ++p) {
            cap[p] = flow_cap_static[p];
            for (auto [d, scale] : hop_dims[p]) {
              double avail = x[d] / Xc[dims[d].channel] / scale;
              cap[p] = std::min(cap[p], avail);
            }
          }
          for (std::size_t b = 0; b < budgets.size(); ++b) {
            int d = budgets[b].dim;
            limit[b] = nsel[d] * x[d] / Xc[dims[d].channel];
          }
          if (progressive_fill(cap, budgets, limit, w, rate)) {
            for (std::size_t p = 0; p < nf; ++p) weighted[p] = rate[p] / w[p];
            if (!have_best || lex_better(weighted, best_weighted)) {
              have_best = true;
              best_weighted = weighted;
              best_x.assign(x.begin(), x.end());
              best.rates.clear();
              for (std::size_t p = 0; p < nf; ++p) best.rates[topo.flows[p].id] = rate[p];
              best.objective = *std::min_element(weighted.begin(), weighted.end());
            }
          }
        }
        // advance N odometer
        std::size_t d = 0;
        for (; d < nd; ++d) {
          if (nsel[d] < dims[d].n_bar) {
            ++nsel[d];
            break;
          }
          nsel[d] = 1;
        }
        if (d == nd) break;
      }
      // advance x odometer
      std::size_t d = 0;
      for (; d < nd; ++d) {
        if (xi[d] + 1 < steps[d]) {
          ++xi[d];
          break;
        }
        xi[d] = 0;
      }
      if (d == nd) break;
    }
  };

  evaluate_grid(pass);
  if (!have_best)
    throw std::invalid_argument("grid_maxmin: no feasible grid point");

  double mesh = spec.mesh;
  for (int r = 0; r < spec.refinements; ++r) {
    Pass refine;
    refine.mesh = r == 0 ? spec.refined_mesh : mesh / 10.0;
    refine.lo.resize(nd);
    refine.hi.resize(nd);
    for (std::size_t d = 0; d < nd; ++d) {
      refine.lo[d] = std::max(0.0, best_x[d] - mesh);
      refine.hi[d] = std::min(dims[d].x_hi, best_x[d] + mesh);
    }
    evaluate_grid(refine);
    mesh = refine.mesh;
  }
  return best;
}

SlotDistribution enumerate_slot_distribution(std::span<const double> tau) {
  const std::size_t n = tau.size();
  if (n > 4) throw std::invalid_argument("enumerate_slot_distribution: n must be <= 4");
  for (double t : tau)
    if (t < 0.0 || t >= 1.0)
      throw std::invalid_argument("enumerate_slot_distribution: tau must be in [0,1)");
  SlotDistribution dist;
  dist.idle = 0.0;
  dist.success.assign(n, 0.0);
  dist.collision = 0.0;
  for (std::size_t mask = 0; mask < (1u << n); ++mask) {
    double prob = 1.0;
    int bits = 0, who = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        prob *= tau[i];
        ++bits;
        who = static_cast<int>(i);
      } else {
        prob *= 1.0 - tau[i];
      }
    }
    if (bits == 0)
      dist.idle += prob;
    else if (bits == 1)
      dist.success[who] += prob;
    else
      dist.collision += prob;
  }
  return dist;
}

}  // namespace meshfair::oracle
