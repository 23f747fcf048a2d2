#include "meshfair/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace meshfair::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_affine(const Affine& f, const std::vector<double>& v) {
  double s = f.constant;
  for (auto [j, c] : f.terms) s += c * v[j];
  return s;
}

void add_affine_grad(const Affine& f, double w, std::vector<double>& grad) {
  for (auto [j, c] : f.terms) grad[j] += w * c;
}

double log1p_exp(double u) {
  if (u > 35.0) return u;
  if (u < -35.0) return std::exp(u);
  return std::log1p(std::exp(u));
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct DenomEval {
  double log_x;                 // log X
  std::vector<double> dlog_dy;  // per station
  std::vector<double> dlog_deta;
};

DenomEval eval_denom(const DenomBlock& b, const std::vector<double>& v) {
  const std::size_t n = b.y_var.size();
  DenomEval e;
  e.dlog_dy.assign(n, 0.0);
  e.dlog_deta.assign(n, 0.0);
  std::vector<double> x(n), nn(n);
  double burst = 0.0;
  double log_prod = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::exp(v[b.y_var[k]]);
    nn[k] = b.eta_var[k] < 0 ? 1.0 : std::exp(v[b.eta_var[k]]);
    burst += (nn[k] - 1.0) * x[k];
    log_prod += std::log1p(x[k]);
  }
  double log_sprod = std::log(b.scale) + log_prod;  // log(scale * prod(1+x))
  if (log_sprod < 600.0) {
    double sprod = std::exp(log_sprod);
    double X = b.base + burst + (sprod - b.scale);
    e.log_x = std::log(X);
    for (std::size_t k = 0; k < n; ++k) {
      double dX_dy = x[k] * (nn[k] - 1.0) + x[k] * sprod / (1.0 + x[k]);
      e.dlog_dy[k] = dX_dy / X;
      if (b.eta_var[k] >= 0) e.dlog_deta[k] = nn[k] * x[k] / X;
    }
    return e;
  }
  // Product term dominates double range; stay in log space. The additive
  // part base + burst - scale is O(1) against sprod > e^600.
  e.log_x = log_sprod;
  double inv_x = std::exp(-e.log_x);  // underflows harmlessly
  for (std::size_t k = 0; k < n; ++k) {
    e.dlog_dy[k] = x[k] / (1.0 + x[k]) + (nn[k] - 1.0) * x[k] * inv_x;
    if (b.eta_var[k] >= 0) e.dlog_deta[k] = nn[k] * x[k] * inv_x;
  }
  return e;
}

}  // namespace

int LogProgram::add_var(std::string name, double lower, double upper) {
  vars.push_back({std::move(name), lower, upper});
  return static_cast<int>(vars.size()) - 1;
}

DenomBlock DenomBlock::fold(double a, const std::vector<double>& x_fixed,
                            const std::vector<double>& n_fixed) {
  DenomBlock b;
  double burst = 0.0;
  double prod = 1.0;
  for (std::size_t k = 0; k < x_fixed.size(); ++k) {
    burst += (n_fixed[k] - 1.0) * x_fixed[k];
    prod *= 1.0 + x_fixed[k];
  }
  b.scale = prod;
  b.base = a + burst + prod - 1.0;
  return b;
}

double Constraint::eval(const std::vector<double>& v) const {
  double g = eval_affine(affine, v);
  for (const auto& block : lse) {
    double m = -kInf;
    for (const auto& t : block.exponents) m = std::max(m, eval_affine(t, v));
    double s = 0.0;
    for (const auto& t : block.exponents) s += std::exp(eval_affine(t, v) - m);
    g += m + std::log(s);
  }
  for (const auto& block : softplus)
    for (const auto& t : block.exponents) g += log1p_exp(eval_affine(t, v));
  for (const auto& block : denom) g += eval_denom(block, v).log_x;
  return g;
}

void Constraint::add_grad(const std::vector<double>& v, double w,
                          std::vector<double>& grad) const {
  add_affine_grad(affine, w, grad);
  for (const auto& block : lse) {
    double m = -kInf;
    for (const auto& t : block.exponents) m = std::max(m, eval_affine(t, v));
    double s = 0.0;
    std::vector<double> e(block.exponents.size());
    for (std::size_t i = 0; i < block.exponents.size(); ++i) {
      e[i] = std::exp(eval_affine(block.exponents[i], v) - m);
      s += e[i];
    }
    for (std::size_t i = 0; i < block.exponents.size(); ++i)
      add_affine_grad(block.exponents[i], w * e[i] / s, grad);
  }
  for (const auto& block : softplus)
    for (const auto& t : block.exponents)
      add_affine_grad(t, w * sigmoid(eval_affine(t, v)), grad);
  for (const auto& block : denom) {
    DenomEval e = eval_denom(block, v);
    for (std::size_t k = 0; k < block.y_var.size(); ++k) {
      grad[block.y_var[k]] += w * e.dlog_dy[k];
      if (block.eta_var[k] >= 0) grad[block.eta_var[k]] += w * e.dlog_deta[k];
    }
  }
}

namespace {

// Barrier objective at fixed mu: -obj + mu * (constraint + box log barriers).
struct BarrierProblem {
  const LogProgram& prog;
  double mu;
  int objective;  // -1 = none

  bool strictly_feasible(const std::vector<double>& v, double margin = 0.0) const {
    for (std::size_t j = 0; j < prog.vars.size(); ++j)
      if (!(v[j] > prog.vars[j].lower + margin && v[j] < prog.vars[j].upper - margin))
        return false;
    for (const auto& c : prog.constraints)
      if (!(c.eval(v) < -margin)) return false;
    return true;
  }

  double value(const std::vector<double>& v) const {
    double phi = objective >= 0 ? -v[objective] : 0.0;
    for (const auto& c : prog.constraints) {
      double g = c.eval(v);
      if (g >= 0.0) return kInf;
      phi -= mu * std::log(-g);
    }
    for (std::size_t j = 0; j < prog.vars.size(); ++j) {
      double lo = v[j] - prog.vars[j].lower;
      double hi = prog.vars[j].upper - v[j];
      if (lo <= 0.0 || hi <= 0.0) return kInf;
      phi -= mu * (std::log(lo) + std::log(hi));
    }
    return phi;
  }

  double value_grad(const std::vector<double>& v, std::vector<double>& grad) const {
    grad.assign(v.size(), 0.0);
    double phi = 0.0;
    if (objective >= 0) {
      phi = -v[objective];
      grad[objective] = -1.0;
    }
    for (const auto& c : prog.constraints) {
      double g = c.eval(v);
      if (g >= 0.0) return kInf;
      phi -= mu * std::log(-g);
      c.add_grad(v, mu / (-g), grad);
    }
    for (std::size_t j = 0; j < prog.vars.size(); ++j) {
      double lo = v[j] - prog.vars[j].lower;
      double hi = prog.vars[j].upper - v[j];
      if (lo <= 0.0 || hi <= 0.0) return kInf;
      phi -= mu * (std::log(lo) + std::log(hi));
      grad[j] += -mu / lo + mu / hi;
    }
    return phi;
  }
};

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// L-BFGS two-loop recursion; plain gradient direction until history builds.
class LbfgsDirection {
 public:
  explicit LbfgsDirection(std::size_t memory) : memory_(memory) {}

  void update(const std::vector<double>& s, const std::vector<double>& y) {
    double sy = dot(s, y);
    double ss = std::sqrt(dot(s, s) * dot(y, y));
    if (sy > 1e-12 * std::max(ss, 1e-300)) {
      hist_.push_back({s, y, sy});
      if (hist_.size() > memory_) hist_.pop_front();
    }
  }

  void reset() { hist_.clear(); }

  std::vector<double> direction(const std::vector<double>& grad) const {
    std::vector<double> q = grad;
    std::vector<double> alpha(hist_.size());
    for (std::size_t i = hist_.size(); i-- > 0;) {
      alpha[i] = dot(hist_[i].s, q) / hist_[i].sy;
      axpy(-alpha[i], hist_[i].y, q);
    }
    if (!hist_.empty()) {
      const auto& last = hist_.back();
      double gamma = last.sy / dot(last.y, last.y);
      for (double& x : q) x *= gamma;
    }
    for (std::size_t i = 0; i < hist_.size(); ++i) {
      double beta = dot(hist_[i].y, q) / hist_[i].sy;
      axpy(alpha[i] - beta, hist_[i].s, q);
    }
    for (double& x : q) x = -x;
    return q;
  }

 private:
  struct Pair {
    std::vector<double> s, y;
    double sy;
  };
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  }
  std::size_t memory_;
  std::deque<Pair> hist_;
};

// Minimize the barrier objective at one mu stage. Returns iterations used.
int minimize_stage(const BarrierProblem& bp, std::vector<double>& v,
                   const SolverOptions& opts, int stage, double* final_grad_norm) {
  LbfgsDirection lbfgs(8);
  std::vector<double> grad, new_grad;
  double phi = bp.value_grad(v, grad);
  int iter = 0;
  for (; iter < opts.max_iter_per_stage; ++iter) {
    double gnorm = inf_norm(grad);
    if (opts.trace && iter % 16 == 0)
      opts.trace->push_back({stage, iter, bp.mu, phi, gnorm, 0.0});
    if (gnorm <= opts.grad_tol * std::max(1.0, std::abs(phi))) break;
    std::vector<double> dir = lbfgs.direction(grad);
    double slope = 0.0;
    for (std::size_t j = 0; j < dir.size(); ++j) slope += dir[j] * grad[j];
    if (!(slope < 0.0)) {  // fall back to steepest descent
      lbfgs.reset();
      slope = 0.0;
      for (std::size_t j = 0; j < dir.size(); ++j) {
        dir[j] = -grad[j];
        slope -= grad[j] * grad[j];
      }
    }
    double step = 1.0;
    std::vector<double> trial(v.size());
    double new_phi = kInf;
    bool moved = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t j = 0; j < v.size(); ++j) trial[j] = v[j] + step * dir[j];
      new_phi = bp.value(trial);
      if (new_phi <= phi + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // line search stalled at numerical floor
    bp.value_grad(trial, new_grad);
    std::vector<double> s(v.size()), yv(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      s[j] = trial[j] - v[j];
      yv[j] = new_grad[j] - grad[j];
    }
    lbfgs.update(s, yv);
    v = trial;
    phi = new_phi;
    grad = new_grad;
  }
  if (final_grad_norm) *final_grad_norm = inf_norm(grad);
  return iter;
}

std::vector<double> box_center(const LogProgram& prog) {
  std::vector<double> v(prog.vars.size());
  for (std::size_t j = 0; j < prog.vars.size(); ++j)
    v[j] = 0.5 * (prog.vars[j].lower + prog.vars[j].upper);
  return v;
}

Solution run_barrier(const LogProgram& prog, const SolverOptions& opts,
                     std::vector<double> v) {
  Solution sol;
  double grad_norm = 0.0;
  int stage = 0;
  for (double mu = opts.mu_initial; mu >= opts.mu_final * 0.999; mu *= opts.mu_shrink) {
    BarrierProblem bp{prog, mu, prog.objective};
    minimize_stage(bp, v, opts, stage, &grad_norm);
    ++stage;
  }
  sol.values = v;
  sol.kkt_residual = grad_norm;
  sol.objective = prog.objective >= 0 ? v[prog.objective] : 0.0;
  double worst = -kInf;
  for (std::size_t i = 0; i < prog.constraints.size(); ++i) {
    double g = prog.constraints[i].eval(v);
    worst = std::max(worst, g);
    if (g > -opts.active_tol) sol.active_set.push_back(static_cast<int>(i));
  }
  sol.status = worst <= opts.constraint_tol ? SolveStatus::optimal : SolveStatus::max_iter;
  return sol;
}

// Phase-one program: maximize slack w with g_i(v) + w <= 0.
LogProgram phase_one_program(const LogProgram& prog, double w_hi) {
  LogProgram p1 = prog;
  int w = p1.add_var("phase1.slack", -w_hi, w_hi);
  for (auto& c : p1.constraints) c.affine.add(w, 1.0);
  p1.objective = w;
  return p1;
}

}  // namespace

void audit_convexity(const LogProgram& prog, int chords_per_constraint,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  std::vector<double> z1(prog.vars.size()), z2(prog.vars.size()), zm(prog.vars.size());
  for (const auto& c : prog.constraints) {
    for (int it = 0; it < chords_per_constraint; ++it) {
      for (std::size_t j = 0; j < prog.vars.size(); ++j) {
        z1[j] = uniform(prog.vars[j].lower, prog.vars[j].upper);
        z2[j] = uniform(prog.vars[j].lower, prog.vars[j].upper);
      }
      double alpha = uniform(0.0, 1.0);
      for (std::size_t j = 0; j < prog.vars.size(); ++j)
        zm[j] = alpha * z1[j] + (1.0 - alpha) * z2[j];
      double lhs = c.eval(zm);
      double rhs = alpha * c.eval(z1) + (1.0 - alpha) * c.eval(z2);
      if (!std::isfinite(lhs) || !std::isfinite(rhs))
        throw std::invalid_argument("solver: non-finite constraint value in " + c.label);
      if (lhs > rhs + 1e-9 * std::max(1.0, std::abs(rhs)))
        throw std::invalid_argument("solver: constraint fails convexity audit: " + c.label);
    }
  }
}

Solution feasibility(const LogProgram& prog, const SolverOptions& opts) {
  std::vector<double> center = box_center(prog);
  double worst = 0.0;
  for (const auto& c : prog.constraints) worst = std::max(worst, c.eval(center));
  if (!std::isfinite(worst))
    throw std::invalid_argument("solver: constraints non-finite at box center");
  double w_hi = std::max(10.0, 2.0 * std::abs(worst) + 10.0);

  LogProgram p1 = phase_one_program(prog, w_hi);
  std::vector<double> v0 = box_center(p1);
  v0.back() = -worst - 1.0;  // strictly feasible for g_i + w <= 0

  SolverOptions p1_opts = opts;
  p1_opts.trace = nullptr;
  Solution s1 = run_barrier(p1, p1_opts, v0);
  double slack = s1.values.back();

  Solution out;
  out.values.assign(s1.values.begin(), s1.values.end() - 1);
  out.kkt_residual = s1.kkt_residual;
  if (slack > 0.0) {
    out.status = SolveStatus::optimal;
    out.objective = slack;
    return out;
  }
  out.status = SolveStatus::infeasible;
  std::ostringstream cert;
  cert << "infeasible: max slack " << slack << "; violated at analytic center:";
  for (std::size_t i = 0; i < prog.constraints.size(); ++i) {
    double g = prog.constraints[i].eval(out.values);
    if (g >= slack - 1e-9) {
      cert << ' ' << (prog.constraints[i].label.empty() ? "constraint#" + std::to_string(i)
                                                        : prog.constraints[i].label);
    }
  }
  out.certificate = cert.str();
  return out;
}

Solution solve(const LogProgram& prog, const SolverOptions& opts,
               const std::vector<double>* start) {
  for (const auto& var : prog.vars)
    if (!(var.lower < var.upper))
      throw std::invalid_argument("solver: empty box for variable " + var.name);
  if (prog.objective >= 0 && prog.objective >= static_cast<int>(prog.vars.size()))
    throw std::invalid_argument("solver: objective index out of range");
  if (opts.audit_convexity) audit_convexity(prog);

  std::vector<double> v;
  if (start && start->size() == prog.vars.size()) {
    BarrierProblem probe{prog, 1.0, -1};
    if (probe.strictly_feasible(*start, 1e-12)) v = *start;
  }
  if (v.empty()) {
    Solution s1 = feasibility(prog, opts);
    if (s1.status == SolveStatus::infeasible) return s1;
    v = s1.values;
  }
  return run_barrier(prog, opts, v);
}

}  // namespace meshfair::solver
