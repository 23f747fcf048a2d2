#ifndef MESHFAIR_SOLVER_HPP
#define MESHFAIR_SOLVER_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace meshfair::solver {

// Affine form c0 + sum_j coeff_j * v_j over the program variables.
struct Affine {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)

  Affine& add(int var, double coeff) {
    terms.emplace_back(var, coeff);
    return *this;
  }
};

// log sum_t exp(affine_t(v)); convex.
struct LseBlock {
  std::vector<Affine> exponents;
};

// sum_t log(1 + exp(affine_t(v))); convex. Realizes prod(1+x_k) <= p_bar.
struct SoftplusBlock {
  std::vector<Affine> exponents;
};

// log X for one WLAN: X = base + sum_k (N_k - 1) x_k + scale * (prod_k (1+x_k) - 1)
// with x_k = exp(v[y_var[k]]) and N_k = exp(v[eta_var[k]]) (eta_var[k] < 0
// pins N_k = 1). Stations held at fixed rates fold into base and scale:
// base = a + sum_fixed (N-1) x + scale - 1, scale = prod_fixed (1+x).
// Equals an LseBlock over the posynomial expansion of X, evaluated in
// product form; base > 0 keeps the expansion posynomial.
struct DenomBlock {
  double base = 0.01;   // a when no stations are pinned
  double scale = 1.0;
  std::vector<int> y_var;
  std::vector<int> eta_var;

  // Fold constant a plus pinned stations (x_fixed, n_fixed) into base/scale.
  static DenomBlock fold(double a, const std::vector<double>& x_fixed,
                         const std::vector<double>& n_fixed);
};

// Constraint g(v) <= 0 with g = affine + sum of convex blocks.
struct Constraint {
  Affine affine;
  std::vector<LseBlock> lse;
  std::vector<SoftplusBlock> softplus;
  std::vector<DenomBlock> denom;
  std::string label;

  double eval(const std::vector<double>& v) const;
  // grad += w * dg/dv
  void add_grad(const std::vector<double>& v, double w, std::vector<double>& grad) const;
};

struct Variable {
  std::string name;
  double lower = -40.0;
  double upper = 40.0;
};

// Program in log coordinates: maximize one variable subject to convex
// constraints g_i(v) <= 0 and box bounds.
struct LogProgram {
  std::vector<Variable> vars;
  std::vector<Constraint> constraints;
  int objective = -1;  // variable index to maximize; -1 = pure feasibility

  int add_var(std::string name, double lower, double upper);
};

enum class SolveStatus { optimal, infeasible, max_iter };

struct Solution {
  std::vector<double> values;
  SolveStatus status = SolveStatus::max_iter;
  double kkt_residual = 0.0;
  double objective = 0.0;
  std::vector<int> active_set;       // constraints tight within tolerance
  std::string certificate;           // infeasibility diagnostic

  bool ok() const { return status == SolveStatus::optimal; }
};

struct TraceRow {
  int stage;
  int iter;
  double barrier_mu;
  double value;
  double grad_norm;
  double worst_constraint;
};

struct SolverOptions {
  double mu_initial = 1.0;
  double mu_final = 1e-8;
  double mu_shrink = 0.1;
  int max_iter_per_stage = 10000;
  double grad_tol = 1e-9;
  double constraint_tol = 1e-7;
  double active_tol = 1e-6;
  bool audit_convexity = true;       // random chord checks on every accepted program
  std::vector<TraceRow>* trace = nullptr;
};

// Interior-point solve; `start` must be strictly feasible if given, otherwise
// a phase-one search runs first.
Solution solve(const LogProgram& prog, const SolverOptions& opts = {},
               const std::vector<double>* start = nullptr);

// Phase-one: returns a strictly feasible point or an infeasibility
// certificate (the most-violated constraints at the analytic center).
Solution feasibility(const LogProgram& prog, const SolverOptions& opts = {});

// Chord checks of every constraint; throws std::invalid_argument when a
// constraint evaluates non-convex (malformed construction) or non-finite.
void audit_convexity(const LogProgram& prog, int chords_per_constraint = 100,
                     std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace meshfair::solver

#endif
