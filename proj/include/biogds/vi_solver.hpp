// Per-time-step solvers: a primal-dual active set method for the lower-bound
// obstacle QP (with a projected Gauss-Seidel fallback), an SPD linear solve,
// and the Picard fixed-point iteration that freezes the reaction arguments.
#ifndef BIOGDS_VI_SOLVER_HPP
#define BIOGDS_VI_SOLVER_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "biogds/gdm.hpp"
#include "biogds/sparse.hpp"

namespace biogds {

using ReactionFn = std::function<double(double p, double q)>;

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// C = a*A + b*B (patterns may differ).
SparseMatrix add_scaled(const SparseMatrix& a, double ca, const SparseMatrix& b, double cb);

struct ObstacleOptions {
  double tol = 1e-10;            // complementarity residual, diagonally scaled
  int max_iterations = 500;      // active-set changes before falling back
  double cg_tol = 1e-12;
  int pgs_max_sweeps = 200000;
};

struct ObstacleSolution {
  std::vector<double> u;
  std::vector<double> lambda;    // A u - b
  std::vector<int> active;      // indices held at the barrier
  int iterations = 0;
  double comp_residual = 0.0;    // max_i |min(lambda_i / A_ii, u_i - lo_i)|
  bool used_fallback = false;
};

// Unique minimizer of 1/2 u'Au - b'u over {u >= lower}; entries of `lower` may
// be -inf (unconstrained). Throws SolverError on non-convergence.
ObstacleSolution solve_obstacle_qp(const SparseMatrix& a, const std::vector<double>& b,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& u0,
                                   const ObstacleOptions& opts = {});

struct LinearSolveOptions {
  double tol = 1e-12;
  int max_iter = 0;
  bool direct_fallback = true;
};

// CG with Jacobi preconditioning; dense factorization fallback on stagnation.
std::vector<double> solve_linear_spd(const SparseMatrix& a, const std::vector<double>& b,
                                     const LinearSolveOptions& opts = {},
                                     const std::vector<double>* x0 = nullptr);

// Interior/lift split of an operator assembled over all dofs.
struct LiftedOperator {
  SparseMatrix full;
  SparseMatrix ii;  // interior x interior
  SparseMatrix ib;  // interior x lift
};
LiftedOperator split_operator(SparseMatrix full, int n_interior, int n_lift);

struct PicardReport {
  int iterations = 0;
  bool converged = false;
  bool contraction_ok = false;        // dt < 1/(2 M_lip)
  double final_residual = 0.0;
  std::vector<double> residuals;      // combined L2 change per iterate
};

// One implicit Euler step of the coupled system in lifted interior form.
struct StepSystem {
  int n_interior = 0;
  int n_lift = 0;
  const LiftedOperator* mass_p = nullptr;  // Gram of Pi_D (possibly lumped) for the p equation
  const LiftedOperator* mass_q = nullptr;  // mass for the q equation
  const LiftedOperator* diff_p = nullptr;  // A-weighted stiffness
  const LiftedOperator* diff_q = nullptr;
  const SparseMatrix* sys_p = nullptr;     // mass_p.ii/dt + diff_p.ii
  const SparseMatrix* sys_q = nullptr;
  double dt = 0.0;
  const std::vector<double>* p_prev = nullptr;  // full dof vectors of step n
  const std::vector<double>* q_prev = nullptr;
  std::vector<double> p_lift;   // boundary values at t^{n+1}
  std::vector<double> q_lift;
  std::vector<double> source_p; // assembled source functionals, interior slice used
  std::vector<double> source_q;
  ReactionFn f, g;
  double m_lip = 0.0;
  const std::vector<double>* lower = nullptr;  // interior bounds; null = unconstrained
};

struct AdvanceOptions {
  double picard_tol = 1e-9;
  int max_picard = 100;
  bool start_from_zero = false;  // Picard initial guess: zero instead of previous step
  ObstacleOptions obstacle;
  LinearSolveOptions linear;
};

struct StepResult {
  std::vector<double> p;  // full dof vectors at t^{n+1}
  std::vector<double> q;
  PicardReport report;
  double feasibility_slack = 0.0;   // min_i (p_i - lo_i) over constrained dofs
  double complementarity = 0.0;     // max_i |lambda_i (p_i - lo_i)|, mass-scaled lambda
  std::vector<double> multiplier;   // mass-scaled multiplier on interior dofs
};

// Fixed-point iteration: freeze the reactions at the current reconstruction
// values, solve the obstacle problem for p and the SPD system for q, repeat
// until the combined L2 change falls under tolerance. Throws SolverError on
// Picard non-convergence (the report is embedded in the message).
StepResult advance_step(const StepSystem& sys, const AdvanceOptions& opts = {});

}  // namespace biogds

#endif
