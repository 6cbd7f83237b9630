// Problem definitions (coefficients, reactions, barrier, data), the time grid,
// and the outer implicit Euler loop producing trajectories.
#ifndef BIOGDS_MODEL_HPP
#define BIOGDS_MODEL_HPP

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "biogds/gdm.hpp"
#include "biogds/vi_solver.hpp"

namespace biogds {

// Pointwise evaluators of a known exact solution, used for manufactured
// sources, boundary data, and error measurement.
struct ExactSolution {
  ScalarTimeFn p, q;
  std::function<Point2(const Point2&, double)> grad_p, grad_q;
  ScalarTimeFn dp_dt, dq_dt;
  ScalarTimeFn div_a_grad_p, div_b_grad_q;
  // True when the solution has a kink inside the polygon at time t; quadrature
  // there is subdivided.
  std::function<bool(const std::vector<Point2>& poly, double t)> has_kink;
};

struct ModelProblem {
  std::string name;
  DomainSpec domain{-1.0, 1.0};
  double T = 1.0;
  TensorFn coeff_a, coeff_b;
  double d1 = 0.0, d2 = 0.0;  // eigenvalue bounds of both tensors
  ReactionFn f, g;
  double m_lip = 0.0;  // 0: estimate from the current fields each step
  ScalarFn chi;
  ScalarFn p0, q0;
  bool p0_smooth = true, q0_smooth = true;
  ScalarTimeFn dirichlet_p, dirichlet_q;  // null: homogeneous
  ScalarTimeFn source_p, source_q;        // null: zero
  bool obstacle_upper = false;            // solve p <= chi via negation
  std::shared_ptr<const ExactSolution> exact;
};

// Hard violations throw; soft ones (e.g. a positive barrier on the boundary
// with homogeneous data) come back as warnings.
std::vector<std::string> validate_model(const ModelProblem& m);

// Built-in configurations: "test1" (biofilm growth data) and "test2"
// (manufactured solution with a moving contact disk).
ModelProblem builtin_problem(const std::string& name);

// Exact value of the manufactured solution of test2 ('p' or 'q').
double evaluate_exact_test2(char which, const Point2& x, double t);

// Alternative tabulated source expression for test2, retained for
// cross-checking against the derived sources (see tests).
double test2_tabulated_source(const Point2& x, double t);

struct TimeGrid {
  std::vector<double> knots;  // t0 = 0 < ... < tN = T

  static TimeGrid uniform(double T, int steps);
  int steps() const { return static_cast<int>(knots.size()) - 1; }
  double dt(int n) const { return knots[n + 1] - knots[n]; }
  double dt_max() const;
};

struct Trajectory {
  const GradientDiscretisation* gd = nullptr;
  TimeGrid grid;
  std::vector<std::vector<double>> p, q;  // full dof vectors, steps()+1 entries
  std::vector<PicardReport> reports;      // one per step
  std::vector<double> feasibility;        // min slack per step
  std::vector<double> complementarity;    // per step
  bool projected_initial = false;
};

struct RunOptions {
  AdvanceOptions advance;
  bool lump_mass_p = true;  // lumped mass in the p equation (nodal complementarity for P1)
  bool project_infeasible_initial = true;
  int init_subdivision = 2;
  int source_quad_subdivision = 1;
  std::ostream* log = nullptr;  // warnings; default std::cerr
};

// Assembled linear functional L_i = int f Pi_D e_i.
std::vector<double> assemble_load(const GradientDiscretisation& gd, const ScalarFn& f,
                                  const QuadSpec& q = {});

// Implicit Euler over the grid: (p0, q0) interpolated, then one advance_step
// per interval with fresh Dirichlet lifts and sources. Solver failures are
// rethrown with the step index attached.
Trajectory run(const ModelProblem& model, GradientDiscretisation& gd, const TimeGrid& grid,
               const RunOptions& opts = {});

}  // namespace biogds

#endif
